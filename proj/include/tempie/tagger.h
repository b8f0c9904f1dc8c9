#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempie/corpus.h"
#include "tempie/eval.h"
#include "tempie/iob2.h"
#include "tempie/rnn.h"

namespace tempie {

/// TIMEX3 or EVENT for the span tasks; empty otherwise.
std::string_view task_class(TaggerTask task);

/// Tokenizer: O and B/I over W and E. Span tasks: O, B-<class>, I-<class>.
/// POS: the sorted tag set of the corpus (which must carry POS tags).
std::vector<std::string> task_labels(TaggerTask task, std::span<const Document> corpus);

/// Fresh model for a task with a vocabulary built from `corpus`. With a
/// word2vec file the vocabulary also takes every word listed in the file and
/// rows are loaded from it; otherwise embeddings are random.
RnnModel init_tagger(TaggerTask task, std::span<const Document> corpus, const Hyperparams& hp,
                     const std::filesystem::path* pretrained = nullptr);

/// One labeled sequence per sentence: padded character windows for the
/// tokenizer, normalized words otherwise.
std::vector<LabeledSequence> task_sequences(const RnnModel& model, TaggerTask task, std::span<const Document> docs,
                                            int pad);

/// Argmax tags over `ids`; the tokenizer output also gets repair_span_classes.
TagSequence tag(const RnnModel& model, std::span<const int> ids, TaggerTask task);

/// Predicted spans of the task's class in one document.
std::vector<Span> tag_spans(const RnnModel& model, const Document& doc, TaggerTask task);
std::vector<std::vector<std::string>> tag_pos(const RnnModel& model, const Document& doc);

/// Segments raw text into tokens and sentences: W and E spans become tokens,
/// and an E token closes its sentence.
Document tokenize_text(const RnnModel& model, std::string id, std::string text);

/// Documents annotated by the model: span tasks replace gold spans, POS
/// replaces tags and the tokenizer rebuilds tokens and sentences.
std::vector<Document> apply_tagger(const RnnModel& model, TaggerTask task, std::span<const Document> docs);

/// Exact-span score of the tagger over `docs`. The tokenizer is scored on
/// W/E spans of each padded sentence window, POS on per-token accuracy
/// (reported as tp/fp with fn = fp).
PrfScore evaluate_tagger(const RnnModel& model, TaggerTask task, std::span<const Document> docs, int pad);

}  // namespace tempie
