#pragma once

// Synthetic, oracle-labeled task generators: conversations with planted
// conversation/utterance labels, ListOps, byte-level text, byte-level
// retrieval pairs, plus batching and JSONL dataset I/O.
//
// Every generator is a pure function of its spec: the same spec yields a
// byte-identical corpus. Labels are planted through marker tokens that the
// filler distribution never produces, so an exact labeling oracle exists.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "longconv/heads.hpp"

namespace longconv {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Conversations
// ---------------------------------------------------------------------------

enum class Speaker { agent = 0, customer = 1 };

struct Utterance {
  Speaker speaker = Speaker::agent;
  std::vector<int> tokens;
  std::vector<int> labels;  // sorted distinct action ids, may be empty
};

struct Conversation {
  std::string id;
  int conv_label = 0;
  std::vector<Utterance> utterances;

  std::int64_t token_count_with_speakers() const {
    std::int64_t n = 0;
    for (const auto& u : utterances) n += 1 + static_cast<std::int64_t>(u.tokens.size());
    return n;
  }
};

struct GeneratorSpec {
  std::uint64_t seed = 1;
  int n_conversations = 100;
  int k_conv = 10;
  int k_utt = 30;
  int vocab_size = 256;
  double mean_len = 252.0;  // total tokens incl. speaker tokens
  double sd_len = 92.0;
  int max_len = 4096;
  double utt_plant_density = 0.5;
  double zipf_s = 1.0;  // action-label frequency skew

  // Filler tokens live in [0, marker_base); markers occupy the top of the
  // vocabulary: k_conv issue markers then k_utt action markers.
  int marker_base() const { return vocab_size - k_conv - k_utt; }
  int conv_marker(int c) const { return marker_base() + c; }
  int utt_marker(int a) const { return marker_base() + k_conv + a; }

  void validate() const;
};

enum class Split { train, valid, test };

// Deterministic 80/10/10 split by hash of the conversation id.
Split split_of(const std::string& conversation_id);

std::vector<Conversation> gen_conversations(const GeneratorSpec& spec);

// Recovers planted labels exactly from marker tokens; the reference the
// learnability checks compare against.
class PlantOracle {
 public:
  explicit PlantOracle(const GeneratorSpec& spec) : spec_(spec) { spec_.validate(); }

  int conv_label(const Conversation& conv) const;
  std::vector<int> utterance_labels(const Utterance& utt) const;

  // The planted trigram for a label; first token is the marker.
  std::vector<int> conv_pattern(int c) const;
  std::vector<int> utt_pattern(int a) const;

 private:
  GeneratorSpec spec_;
};

// ---------------------------------------------------------------------------
// ListOps
// ---------------------------------------------------------------------------

struct ListOpsSpec {
  std::uint64_t seed = 1;
  int n = 100;
  int max_depth = 2;
  int max_args = 4;
  int max_len = 256;  // characters

  void validate() const;
};

struct ListOpsExample {
  std::string expr;
  int label = 0;  // 0..9
};

class ListOpsParseError : public DataError {
 public:
  ListOpsParseError(const std::string& msg, std::size_t position)
      : DataError(msg + " at position " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

// Recursive evaluation of bracketed prefix expressions over
// MIN / MAX / MED / SM (sum mod 10); MED of even arity is the lower median.
int eval_listops(const std::string& expr);

std::vector<ListOpsExample> gen_listops(const ListOpsSpec& spec);

inline std::vector<int> listops_tokens(const std::string& expr) {
  std::vector<int> t;
  t.reserve(expr.size());
  for (unsigned char c : expr) t.push_back(static_cast<int>(c));
  return t;
}

// ---------------------------------------------------------------------------
// Byte-level text classification
// ---------------------------------------------------------------------------

struct TextSpec {
  std::uint64_t seed = 1;
  int n = 100;
  std::vector<std::vector<int>> motifs;  // planted byte n-grams; label 1 iff present
  double mean_len = 400.0;
  double sd_len = 200.0;
  int min_len = 16;

  static std::vector<std::vector<int>> default_motifs(std::uint64_t seed);
  void validate() const;
};

struct TextExample {
  std::vector<int> bytes;
  int label = 0;
};

std::vector<TextExample> gen_text_bytes(const TextSpec& spec);

// Substring scan; the labeling oracle for gen_text_bytes.
bool contains_motif(const std::vector<int>& bytes, const std::vector<std::vector<int>>& motifs);

// ---------------------------------------------------------------------------
// Byte-level document retrieval
// ---------------------------------------------------------------------------

struct RetrievalSpec {
  std::uint64_t seed = 1;
  int n = 100;  // pairs; balanced matched/unmatched
  int doc_len = 2048;
  int n_topics = 16;
  int signature_count = 8;  // topic tokens dispersed across the document

  void validate() const;
};

struct RetrievalPair {
  std::vector<int> doc_a;
  std::vector<int> doc_b;
  int match = 0;
};

std::vector<RetrievalPair> gen_retrieval(const RetrievalSpec& spec);

// Dominant topic marker of a document, or nullopt if none present.
std::optional<int> retrieval_topic(const std::vector<int>& doc, const RetrievalSpec& spec);

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

struct TaskBatch {
  std::vector<std::vector<int>> tokens;        // [B][T_max], padded
  std::vector<std::vector<std::uint8_t>> mask; // 1 = real token
  std::vector<std::int64_t> lengths;
  std::vector<std::vector<UtteranceSpan>> spans;
  std::vector<MtlTargets> targets;
  std::int64_t max_len = 0;
};

// Inserts one speaker special token in front of each utterance; spans start
// at the speaker token and tile [0,T) exactly.
TaskBatch encode_batch(const std::vector<Conversation>& conversations, int pad_id,
                       std::pair<int, int> speaker_token_ids, int k_utt,
                       std::int64_t max_len = 4096);

// Inverse of encode_batch for round-trip checks; ids are not recoverable.
std::vector<Conversation> decode_batch(const TaskBatch& batch,
                                       std::pair<int, int> speaker_token_ids);

// ---------------------------------------------------------------------------
// JSONL dataset I/O (UTF-8, stable field order, one record per line)
// ---------------------------------------------------------------------------

void write_conversations_jsonl(const std::string& path, const std::vector<Conversation>& corpus);
std::vector<Conversation> read_conversations_jsonl(const std::string& path);

void write_listops_jsonl(const std::string& path, const std::vector<ListOpsExample>& corpus);
std::vector<ListOpsExample> read_listops_jsonl(const std::string& path);

void write_text_jsonl(const std::string& path, const std::vector<TextExample>& corpus);
std::vector<TextExample> read_text_jsonl(const std::string& path);

void write_retrieval_jsonl(const std::string& path, const std::vector<RetrievalPair>& corpus);
std::vector<RetrievalPair> read_retrieval_jsonl(const std::string& path);

}  // namespace longconv
