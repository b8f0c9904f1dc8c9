#include "tempie/commands.h"

int main(int argc, char** argv) { return tempie::cli_main(argc, argv); }
