#include "tempie/tagger.h"

#include <set>

#include "tempie/error.h"
#include "tempie/rng.h"

namespace tempie {

std::string_view task_class(TaggerTask task) {
  if (task == TaggerTask::Timex3) return kTimex3;
  if (task == TaggerTask::Event) return kEvent;
  return {};
}

std::vector<std::string> task_labels(TaggerTask task, std::span<const Document> corpus) {
  switch (task) {
    case TaggerTask::Tokenizer: {
      const std::string w(kWordClass), e(kEndClass);
      return {"O", "B-" + w, "I-" + w, "B-" + e, "I-" + e};
    }
    case TaggerTask::Pos: {
      std::set<std::string> tags;
      for (const Document& d : corpus) {
        if (!d.pos_tags) throw DataError("document " + d.id + " has no POS tags");
        for (const auto& s : *d.pos_tags) tags.insert(s.begin(), s.end());
      }
      if (tags.empty()) throw DataError("corpus has no POS tags");
      return {tags.begin(), tags.end()};
    }
    case TaggerTask::Timex3:
    case TaggerTask::Event: {
      const std::string k(task_class(task));
      return {"O", "B-" + k, "I-" + k};
    }
  }
  return {};
}

RnnModel init_tagger(TaggerTask task, std::span<const Document> corpus, const Hyperparams& hp,
                     const std::filesystem::path* pretrained) {
  const VocabLevel level = task == TaggerTask::Tokenizer ? VocabLevel::Char : VocabLevel::Word;
  Vocabulary vocab = build_vocab(corpus, level);
  EmbeddingTable table;
  const std::uint64_t embed_seed = derive_seed(hp.seed, "embeddings");
  if (pretrained) {
    std::vector<std::string> words = vocab.words();
    for (std::string& w : read_word2vec_words(*pretrained)) words.push_back(std::move(w));
    vocab = Vocabulary::from_words(std::move(words));
    table = load_word2vec_text(*pretrained, vocab, hp.dim, embed_seed);
  } else {
    table = init_random(vocab, hp.dim, embed_seed);
  }
  return make_model(std::move(vocab), level, std::move(table), task_labels(task, corpus), hp.hidden, hp.context,
                    derive_seed(hp.seed, "weights"));
}

namespace {

int label_id(const RnnModel& model, const std::string& label) {
  for (std::size_t i = 0; i < model.labels.size(); ++i) {
    if (model.labels[i] == label) return static_cast<int>(i);
  }
  throw DataError("label '" + label + "' is not in the model's label set");
}

std::vector<int> labels_of(const RnnModel& model, const TagSequence& tags) {
  std::vector<int> out;
  out.reserve(tags.size());
  for (const Iob2Tag& t : tags) out.push_back(label_id(model, t.str()));
  return out;
}

std::string chars_of(const CharSequence& seq) {
  std::string s;
  for (const Token& t : seq.chars) s += t.surface;
  return s;
}

}  // namespace

std::vector<LabeledSequence> task_sequences(const RnnModel& model, TaggerTask task, std::span<const Document> docs,
                                            int pad) {
  std::vector<LabeledSequence> out;
  for (const Document& doc : docs) {
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      LabeledSequence seq;
      if (task == TaggerTask::Tokenizer) {
        const CharSequence cs = char_sequence(doc, si, pad);
        seq.ids = char_ids(model.vocab, chars_of(cs));
        seq.gold = labels_of(model, cs.tags);
      } else {
        seq.ids = word_ids(model.vocab, doc.sentences[si].tokens);
        if (task == TaggerTask::Pos) {
          if (!doc.pos_tags) throw DataError("document " + doc.id + " has no POS tags");
          for (const std::string& p : (*doc.pos_tags)[si]) seq.gold.push_back(label_id(model, p));
        } else {
          seq.gold = labels_of(model, sentence_tags(doc, si, task_class(task)));
        }
      }
      out.push_back(std::move(seq));
    }
  }
  return out;
}

TagSequence tag(const RnnModel& model, std::span<const int> ids, TaggerTask task) {
  TagSequence tags;
  for (int label : predict_labels(model, ids)) tags.push_back(Iob2Tag::parse(model.labels[static_cast<std::size_t>(label)]));
  if (task == TaggerTask::Tokenizer) tags = repair_span_classes(tags);
  return tags;
}

std::vector<Span> tag_spans(const RnnModel& model, const Document& doc, TaggerTask task) {
  std::vector<Span> spans;
  for (const Sentence& s : doc.sentences) {
    const TagSequence tags = tag(model, word_ids(model.vocab, s.tokens), task);
    for (Span& span : decode_iob2(tags, s.tokens)) spans.push_back(std::move(span));
  }
  return spans;
}

std::vector<std::vector<std::string>> tag_pos(const RnnModel& model, const Document& doc) {
  std::vector<std::vector<std::string>> out;
  for (const Sentence& s : doc.sentences) {
    std::vector<std::string>& tags = out.emplace_back();
    for (int label : predict_labels(model, word_ids(model.vocab, s.tokens))) {
      tags.push_back(model.labels[static_cast<std::size_t>(label)]);
    }
  }
  return out;
}

Document tokenize_text(const RnnModel& model, std::string id, std::string text) {
  Document doc;
  doc.id = std::move(id);
  doc.text = std::move(text);
  if (doc.text.empty()) return doc;
  std::vector<Token> chars;
  for (std::size_t i = 0; i < doc.text.size(); ++i) {
    chars.push_back(Token{doc.text.substr(i, 1), static_cast<int>(i), static_cast<int>(i + 1)});
  }
  const TagSequence tags = tag(model, char_ids(model.vocab, doc.text), TaggerTask::Tokenizer);
  Sentence current;
  for (const Span& span : decode_iob2(tags, chars)) {
    current.tokens.push_back(Token{doc.text.substr(static_cast<std::size_t>(span.begin),
                                                   static_cast<std::size_t>(span.end - span.begin)),
                                   span.begin, span.end});
    if (span.klass == kEndClass) {
      doc.sentences.push_back(std::move(current));
      current = {};
    }
  }
  if (!current.tokens.empty()) doc.sentences.push_back(std::move(current));
  return doc;
}

std::vector<Document> apply_tagger(const RnnModel& model, TaggerTask task, std::span<const Document> docs) {
  std::vector<Document> out;
  for (const Document& doc : docs) {
    Document tagged;
    switch (task) {
      case TaggerTask::Tokenizer:
        tagged = tokenize_text(model, doc.id, doc.text);
        tagged.doctime = doc.doctime;
        tagged.revisions = doc.revisions;
        break;
      case TaggerTask::Pos:
        tagged = doc;
        tagged.pos_tags = tag_pos(model, doc);
        break;
      default:
        tagged = doc;
        tagged.gold_spans = tag_spans(model, doc, task);
        break;
    }
    out.push_back(std::move(tagged));
  }
  return out;
}

PrfScore evaluate_tagger(const RnnModel& model, TaggerTask task, std::span<const Document> docs, int pad) {
  PrfScore total = PrfScore::from_counts(0, 0, 0);
  for (const Document& doc : docs) {
    switch (task) {
      case TaggerTask::Tokenizer:
        for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
          const CharSequence cs = char_sequence(doc, si, pad);
          const TagSequence pred = tag(model, char_ids(model.vocab, chars_of(cs)), task);
          total += score_spans(decode_iob2(cs.tags, cs.chars), decode_iob2(pred, cs.chars), MatchMode::Exact);
        }
        break;
      case TaggerTask::Pos: {
        if (!doc.pos_tags) throw DataError("document " + doc.id + " has no POS tags");
        const auto pred = tag_pos(model, doc);
        long right = 0, wrong = 0;
        for (std::size_t si = 0; si < pred.size(); ++si) {
          for (std::size_t i = 0; i < pred[si].size(); ++i) ((*doc.pos_tags)[si][i] == pred[si][i] ? right : wrong)++;
        }
        total += PrfScore::from_counts(right, wrong, wrong);
        break;
      }
      default:
        total += score_spans(doc.spans_of(task_class(task)), tag_spans(model, doc, task), MatchMode::Exact);
        break;
    }
  }
  return total;
}

}  // namespace tempie
