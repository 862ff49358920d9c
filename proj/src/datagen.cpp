#include "longconv/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <functional>

#include <json.hpp>

#include "longconv/rng.hpp"

namespace longconv {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Conversations
// ---------------------------------------------------------------------------

void GeneratorSpec::validate() const {
  if (n_conversations < 1) throw DataError("GeneratorSpec: n_conversations must be >= 1");
  if (k_conv < 2) throw DataError("GeneratorSpec: k_conv must be >= 2");
  if (k_utt < 1) throw DataError("GeneratorSpec: k_utt must be >= 1");
  if (marker_base() < 16)
    throw DataError("GeneratorSpec: vocab too small for " + std::to_string(k_conv + k_utt) +
                    " marker tokens plus filler");
  if (mean_len <= 0.0 || sd_len < 0.0) throw DataError("GeneratorSpec: bad length parameters");
  if (max_len < 24)
    throw DataError("GeneratorSpec: infeasible spec, plant length exceeds max length budget");
  if (utt_plant_density < 0.0 || utt_plant_density > 1.0)
    throw DataError("GeneratorSpec: utt_plant_density must be in [0,1]");
  if (zipf_s < 0.0) throw DataError("GeneratorSpec: zipf_s must be >= 0");
}

namespace {

constexpr std::uint64_t kPatternStream = 0xC0FFEEULL;
constexpr int kMinUttLen = 9;  // room for up to three disjoint trigram slots

std::vector<int> derive_pattern(const GeneratorSpec& spec, int marker, std::uint64_t salt) {
  Rng rng = Rng(spec.seed).fork(kPatternStream + salt);
  return {marker, static_cast<int>(rng.uniform_int(0, spec.marker_base())),
          static_cast<int>(rng.uniform_int(0, spec.marker_base()))};
}

// Sample an action id under the Zipf(s) frequency skew.
int sample_zipf(Rng& rng, int k, double s) {
  if (s == 0.0) return static_cast<int>(rng.uniform_int(0, k));
  double total = 0.0;
  for (int a = 0; a < k; ++a) total += 1.0 / std::pow(static_cast<double>(a + 1), s);
  double u = rng.uniform() * total;
  for (int a = 0; a < k; ++a) {
    u -= 1.0 / std::pow(static_cast<double>(a + 1), s);
    if (u <= 0.0) return a;
  }
  return k - 1;
}

void place_trigram(std::vector<int>& tokens, const std::vector<int>& pattern, int slot) {
  for (int j = 0; j < 3; ++j) tokens[static_cast<std::size_t>(3 * slot + j)] = pattern[j];
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

Split split_of(const std::string& conversation_id) {
  const std::uint64_t bucket = fnv1a64(conversation_id) % 10;
  if (bucket < 8) return Split::train;
  return bucket == 8 ? Split::valid : Split::test;
}

std::vector<Conversation> gen_conversations(const GeneratorSpec& spec) {
  spec.validate();
  std::vector<std::vector<int>> conv_patterns, utt_patterns;
  for (int c = 0; c < spec.k_conv; ++c)
    conv_patterns.push_back(derive_pattern(spec, spec.conv_marker(c), static_cast<std::uint64_t>(c)));
  for (int a = 0; a < spec.k_utt; ++a)
    utt_patterns.push_back(derive_pattern(
        spec, spec.utt_marker(a), 1000 + static_cast<std::uint64_t>(a)));

  std::vector<Conversation> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.n_conversations));
  for (int i = 0; i < spec.n_conversations; ++i) {
    Rng rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(i) + 1);
    Conversation conv;
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "conv-%06d", i);
    conv.id = idbuf;
    conv.conv_label = static_cast<int>(rng.uniform_int(0, spec.k_conv));

    const int min_total = std::min(spec.max_len, 2 * (kMinUttLen + 1));
    int total = static_cast<int>(std::lround(rng.normal(spec.mean_len, spec.sd_len)));
    total = std::clamp(total, min_total, spec.max_len);

    int n_utt = std::clamp(total / 25, 2, 16);
    n_utt += static_cast<int>(rng.uniform_int(0, 3)) - 1;
    const int body = total - n_utt;  // one speaker token per utterance
    n_utt = std::clamp(n_utt, 1, std::max(1, body / kMinUttLen));

    // Split the body into utterance lengths, floor kMinUttLen each.
    std::vector<int> lengths(static_cast<std::size_t>(n_utt), kMinUttLen);
    int remaining = body - n_utt * kMinUttLen;
    std::vector<double> weights(static_cast<std::size_t>(n_utt));
    double wsum = 0.0;
    for (auto& w : weights) {
      w = 0.25 + rng.uniform();
      wsum += w;
    }
    int assigned = 0;
    for (int u = 0; u < n_utt; ++u) {
      const int extra = static_cast<int>(remaining * weights[static_cast<std::size_t>(u)] / wsum);
      lengths[static_cast<std::size_t>(u)] += extra;
      assigned += extra;
    }
    lengths.back() += remaining - assigned;

    for (int u = 0; u < n_utt; ++u) {
      Utterance utt;
      utt.speaker = u % 2 == 0 ? Speaker::agent : Speaker::customer;
      utt.tokens.resize(static_cast<std::size_t>(lengths[static_cast<std::size_t>(u)]));
      for (auto& t : utt.tokens) t = static_cast<int>(rng.uniform_int(0, spec.marker_base()));
      conv.utterances.push_back(std::move(utt));
    }

    // Free trigram slots per utterance; plants never overlap.
    std::vector<std::vector<int>> free_slots(static_cast<std::size_t>(n_utt));
    for (int u = 0; u < n_utt; ++u) {
      const int slots = lengths[static_cast<std::size_t>(u)] / 3;
      for (int s = 0; s < slots; ++s) free_slots[static_cast<std::size_t>(u)].push_back(s);
    }
    auto take_slot = [&rng](std::vector<int>& slots) {
      const std::size_t pick =
          static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(slots.size())));
      const int slot = slots[pick];
      slots.erase(slots.begin() + static_cast<std::ptrdiff_t>(pick));
      return slot;
    };

    // Issue pattern in one or two utterances.
    const int n_issue = 1 + (n_utt >= 2 && rng.bernoulli(0.3) ? 1 : 0);
    std::vector<int> issue_utts;
    while (static_cast<int>(issue_utts.size()) < n_issue) {
      const int u = static_cast<int>(rng.uniform_int(0, n_utt));
      if (std::find(issue_utts.begin(), issue_utts.end(), u) == issue_utts.end())
        issue_utts.push_back(u);
    }
    for (int u : issue_utts)
      place_trigram(conv.utterances[static_cast<std::size_t>(u)].tokens,
                    conv_patterns[static_cast<std::size_t>(conv.conv_label)],
                    take_slot(free_slots[static_cast<std::size_t>(u)]));

    // Action trigrams; most utterances carry none.
    for (int u = 0; u < n_utt; ++u) {
      auto& slots = free_slots[static_cast<std::size_t>(u)];
      if (!rng.bernoulli(spec.utt_plant_density)) continue;
      int n_act = 1 + (rng.bernoulli(0.35) ? 1 : 0);
      n_act = std::min<int>(n_act, static_cast<int>(slots.size()));
      std::vector<int> actions;
      while (static_cast<int>(actions.size()) < n_act) {
        const int a = sample_zipf(rng, spec.k_utt, spec.zipf_s);
        if (std::find(actions.begin(), actions.end(), a) == actions.end()) actions.push_back(a);
      }
      for (int a : actions)
        place_trigram(conv.utterances[static_cast<std::size_t>(u)].tokens,
                      utt_patterns[static_cast<std::size_t>(a)], take_slot(slots));
      std::sort(actions.begin(), actions.end());
      conv.utterances[static_cast<std::size_t>(u)].labels = std::move(actions);
    }

    corpus.push_back(std::move(conv));
  }
  return corpus;
}

int PlantOracle::conv_label(const Conversation& conv) const {
  const int base = spec_.marker_base();
  for (const auto& utt : conv.utterances)
    for (int t : utt.tokens)
      if (t >= base && t < base + spec_.k_conv) return t - base;
  throw DataError("oracle: conversation carries no issue marker");
}

std::vector<int> PlantOracle::utterance_labels(const Utterance& utt) const {
  const int lo = spec_.marker_base() + spec_.k_conv;
  std::vector<int> labels;
  for (int t : utt.tokens)
    if (t >= lo && t < lo + spec_.k_utt) {
      const int a = t - lo;
      if (std::find(labels.begin(), labels.end(), a) == labels.end()) labels.push_back(a);
    }
  std::sort(labels.begin(), labels.end());
  return labels;
}

std::vector<int> PlantOracle::conv_pattern(int c) const {
  return derive_pattern(spec_, spec_.conv_marker(c), static_cast<std::uint64_t>(c));
}

std::vector<int> PlantOracle::utt_pattern(int a) const {
  return derive_pattern(spec_, spec_.utt_marker(a), 1000 + static_cast<std::uint64_t>(a));
}

// ---------------------------------------------------------------------------
// ListOps
// ---------------------------------------------------------------------------

void ListOpsSpec::validate() const {
  if (n < 1) throw DataError("ListOpsSpec: n must be >= 1");
  if (max_depth < 1) throw DataError("ListOpsSpec: max_depth must be >= 1");
  if (max_args < 2) throw DataError("ListOpsSpec: max_args must be >= 2");
  if (max_len < 4 + 2 * max_args)
    throw DataError("ListOpsSpec: length budget unsatisfiable for max_args " +
                    std::to_string(max_args));
}

namespace {

struct ListOpsParser {
  const std::string& s;
  std::size_t pos = 0;

  void skip_spaces() {
    while (pos < s.size() && s[pos] == ' ') ++pos;
  }

  int parse_value() {
    skip_spaces();
    if (pos >= s.size()) throw ListOpsParseError("unexpected end of input", pos);
    const char c = s[pos];
    if (c >= '0' && c <= '9') {
      ++pos;
      return c - '0';
    }
    if (c == '[') return parse_operator();
    throw ListOpsParseError(std::string("unexpected character '") + c + "'", pos);
  }

  int parse_operator() {
    ++pos;  // '['
    std::string op;
    while (pos < s.size() && s[pos] >= 'A' && s[pos] <= 'Z') op.push_back(s[pos++]);
    if (op != "MIN" && op != "MAX" && op != "MED" && op != "SM")
      throw ListOpsParseError("unknown operator '" + op + "'", pos - op.size());
    std::vector<int> args;
    for (;;) {
      skip_spaces();
      if (pos >= s.size()) throw ListOpsParseError("unexpected end of input", pos);
      if (s[pos] == ']') {
        ++pos;
        break;
      }
      args.push_back(parse_value());
    }
    if (args.empty()) throw ListOpsParseError("operator " + op + " has no arguments", pos - 1);
    if (op == "MIN") return *std::min_element(args.begin(), args.end());
    if (op == "MAX") return *std::max_element(args.begin(), args.end());
    if (op == "SM") {
      int acc = 0;
      for (int a : args) acc += a;
      return acc % 10;
    }
    // MED: lower median on even arity.
    std::sort(args.begin(), args.end());
    return args[(args.size() - 1) / 2];
  }
};

const char* kListOps[4] = {"MIN", "MAX", "MED", "SM"};

void build_listops(Rng& rng, int depth_left, int max_args, std::string& out) {
  out.push_back('[');
  out += kListOps[rng.uniform_int(0, 4)];
  const int n_args = static_cast<int>(rng.uniform_int(2, max_args + 1));
  for (int a = 0; a < n_args; ++a) {
    out.push_back(' ');
    if (depth_left > 1 && rng.bernoulli(0.35))
      build_listops(rng, depth_left - 1, max_args, out);
    else
      out.push_back(static_cast<char>('0' + rng.uniform_int(0, 10)));
  }
  out.push_back(']');
}

}  // namespace

int eval_listops(const std::string& expr) {
  ListOpsParser parser{expr};
  const int value = parser.parse_value();
  parser.skip_spaces();
  if (parser.pos != expr.size())
    throw ListOpsParseError("trailing characters after expression", parser.pos);
  return value;
}

std::vector<ListOpsExample> gen_listops(const ListOpsSpec& spec) {
  spec.validate();
  std::vector<ListOpsExample> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Rng rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(i) + 1);
    std::string expr;
    for (int attempt = 0;; ++attempt) {
      expr.clear();
      // Shrink depth if the budget keeps being blown.
      const int depth = std::max(1, spec.max_depth - attempt / 8);
      build_listops(rng, depth, spec.max_args, expr);
      if (static_cast<int>(expr.size()) <= spec.max_len) break;
      if (attempt > 200) throw DataError("ListOpsSpec: length budget unsatisfiable");
    }
    corpus.push_back({expr, eval_listops(expr)});
  }
  return corpus;
}

// ---------------------------------------------------------------------------
// Byte-level text classification
// ---------------------------------------------------------------------------

std::vector<std::vector<int>> TextSpec::default_motifs(std::uint64_t seed) {
  Rng rng = Rng(seed).fork(kPatternStream);
  std::vector<std::vector<int>> motifs;
  for (int m = 0; m < 3; ++m) {
    std::vector<int> motif{250 + m};
    for (int j = 0; j < 3; ++j) motif.push_back(static_cast<int>(rng.uniform_int(0, 250)));
    motifs.push_back(std::move(motif));
  }
  return motifs;
}

void TextSpec::validate() const {
  if (n < 1) throw DataError("TextSpec: n must be >= 1");
  if (mean_len <= 0.0 || sd_len < 0.0) throw DataError("TextSpec: bad length parameters");
  std::size_t longest = 0;
  for (const auto& m : motifs) {
    if (m.empty()) throw DataError("TextSpec: empty motif");
    for (int b : m)
      if (b < 0 || b > 255) throw DataError("TextSpec: motif byte out of range");
    longest = std::max(longest, m.size());
  }
  if (min_len < static_cast<int>(longest) || min_len < 1)
    throw DataError("TextSpec: min_len shorter than longest motif");
}

std::vector<TextExample> gen_text_bytes(const TextSpec& spec) {
  spec.validate();
  std::vector<TextExample> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Rng rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(i) + 1);
    TextExample ex;
    int len = static_cast<int>(std::lround(rng.normal(spec.mean_len, spec.sd_len)));
    len = std::max(len, spec.min_len);
    ex.bytes.resize(static_cast<std::size_t>(len));
    // Filler stays below 250 so motifs (which carry a byte >= 250) never
    // appear by accident.
    for (auto& b : ex.bytes) b = static_cast<int>(rng.uniform_int(0, 250));
    ex.label = spec.motifs.empty() ? 0 : static_cast<int>(i % 2);
    if (ex.label == 1) {
      const int n_ins = 1 + static_cast<int>(rng.uniform_int(0, 3));
      for (int j = 0; j < n_ins; ++j) {
        const auto& motif = spec.motifs[static_cast<std::size_t>(
            rng.uniform_int(0, static_cast<std::int64_t>(spec.motifs.size())))];
        const std::int64_t off =
            rng.uniform_int(0, len - static_cast<std::int64_t>(motif.size()) + 1);
        for (std::size_t b = 0; b < motif.size(); ++b)
          ex.bytes[static_cast<std::size_t>(off) + b] = motif[b];
      }
    }
    corpus.push_back(std::move(ex));
  }
  return corpus;
}

bool contains_motif(const std::vector<int>& bytes, const std::vector<std::vector<int>>& motifs) {
  for (const auto& motif : motifs) {
    if (motif.empty() || motif.size() > bytes.size()) continue;
    for (std::size_t i = 0; i + motif.size() <= bytes.size(); ++i) {
      bool hit = true;
      for (std::size_t j = 0; j < motif.size(); ++j)
        if (bytes[i + j] != motif[j]) {
          hit = false;
          break;
        }
      if (hit) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Byte-level document retrieval
// ---------------------------------------------------------------------------

void RetrievalSpec::validate() const {
  if (n < 1) throw DataError("RetrievalSpec: n must be >= 1");
  if (n_topics < 2 || n_topics > 16) throw DataError("RetrievalSpec: n_topics must be in [2,16]");
  if (signature_count < 2) throw DataError("RetrievalSpec: signature_count must be >= 2");
  if (doc_len < 8 * signature_count)
    throw DataError("RetrievalSpec: doc_len too short for the signature dispersion");
}

namespace {

// Topic marker bytes sit in [240,256); one is dropped into each of
// signature_count equal-width strata so the signature spans the document.
std::vector<int> gen_document(Rng& rng, int topic, const RetrievalSpec& spec) {
  std::vector<int> doc(static_cast<std::size_t>(spec.doc_len));
  for (auto& b : doc) b = static_cast<int>(rng.uniform_int(0, 240));
  for (int j = 0; j < spec.signature_count; ++j) {
    const std::int64_t lo = static_cast<std::int64_t>(j) * spec.doc_len / spec.signature_count;
    const std::int64_t hi =
        static_cast<std::int64_t>(j + 1) * spec.doc_len / spec.signature_count;
    doc[static_cast<std::size_t>(rng.uniform_int(lo, hi))] = 240 + topic;
  }
  return doc;
}

}  // namespace

std::vector<RetrievalPair> gen_retrieval(const RetrievalSpec& spec) {
  spec.validate();
  std::vector<RetrievalPair> corpus;
  corpus.reserve(static_cast<std::size_t>(spec.n));
  for (int i = 0; i < spec.n; ++i) {
    Rng rng = Rng(spec.seed).fork(static_cast<std::uint64_t>(i) + 1);
    RetrievalPair pair;
    pair.match = i % 2 == 0 ? 1 : 0;
    const int topic_a = static_cast<int>(rng.uniform_int(0, spec.n_topics));
    const int topic_b =
        pair.match ? topic_a
                   : static_cast<int>((topic_a + 1 + rng.uniform_int(0, spec.n_topics - 1)) %
                                      spec.n_topics);
    pair.doc_a = gen_document(rng, topic_a, spec);
    pair.doc_b = gen_document(rng, topic_b, spec);
    corpus.push_back(std::move(pair));
  }
  return corpus;
}

std::optional<int> retrieval_topic(const std::vector<int>& doc, const RetrievalSpec& spec) {
  std::vector<int> counts(static_cast<std::size_t>(spec.n_topics), 0);
  for (int b : doc)
    if (b >= 240 && b < 240 + spec.n_topics) ++counts[static_cast<std::size_t>(b - 240)];
  int best = -1, best_count = 0;
  for (int t = 0; t < spec.n_topics; ++t)
    if (counts[static_cast<std::size_t>(t)] > best_count) {
      best = t;
      best_count = counts[static_cast<std::size_t>(t)];
    }
  if (best < 0) return std::nullopt;
  return best;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

TaskBatch encode_batch(const std::vector<Conversation>& conversations, int pad_id,
                       std::pair<int, int> speaker_token_ids, int k_utt, std::int64_t max_len) {
  if (conversations.empty()) throw DataError("encode_batch: empty batch");
  TaskBatch batch;
  for (const auto& conv : conversations) {
    if (conv.utterances.empty()) throw DataError("encode_batch: conversation without utterances");
    const std::int64_t t_len = conv.token_count_with_speakers();
    if (t_len > max_len)
      throw DataError("encode_batch: conversation '" + conv.id + "' has " +
                      std::to_string(t_len) + " tokens, exceeding max length " +
                      std::to_string(max_len));
    std::vector<int> tokens;
    tokens.reserve(static_cast<std::size_t>(t_len));
    std::vector<UtteranceSpan> spans;
    MtlTargets targets;
    targets.conversation_label = conv.conv_label;
    for (std::size_t u = 0; u < conv.utterances.size(); ++u) {
      const auto& utt = conv.utterances[u];
      UtteranceSpan span;
      span.start = static_cast<std::int64_t>(tokens.size());
      span.utterance_index = static_cast<std::int64_t>(u);
      tokens.push_back(utt.speaker == Speaker::agent ? speaker_token_ids.first
                                                     : speaker_token_ids.second);
      tokens.insert(tokens.end(), utt.tokens.begin(), utt.tokens.end());
      span.end = static_cast<std::int64_t>(tokens.size());
      spans.push_back(span);
      std::vector<std::uint8_t> binary(static_cast<std::size_t>(k_utt), 0);
      for (int a : utt.labels) {
        if (a < 0 || a >= k_utt)
          throw DataError("encode_batch: utterance label " + std::to_string(a) +
                          " outside [0," + std::to_string(k_utt) + ")");
        binary[static_cast<std::size_t>(a)] = 1;
      }
      targets.utterance_labels.push_back(std::move(binary));
    }
    batch.lengths.push_back(t_len);
    batch.tokens.push_back(std::move(tokens));
    batch.spans.push_back(std::move(spans));
    batch.targets.push_back(std::move(targets));
  }
  batch.max_len = *std::max_element(batch.lengths.begin(), batch.lengths.end());
  for (std::size_t b = 0; b < batch.tokens.size(); ++b) {
    std::vector<std::uint8_t> mask(static_cast<std::size_t>(batch.max_len), 0);
    std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(batch.lengths[b]), 1);
    batch.tokens[b].resize(static_cast<std::size_t>(batch.max_len), pad_id);
    batch.mask.push_back(std::move(mask));
  }
  return batch;
}

std::vector<Conversation> decode_batch(const TaskBatch& batch,
                                       std::pair<int, int> speaker_token_ids) {
  std::vector<Conversation> out;
  for (std::size_t b = 0; b < batch.tokens.size(); ++b) {
    Conversation conv;
    conv.conv_label = batch.targets[b].conversation_label;
    for (std::size_t s = 0; s < batch.spans[b].size(); ++s) {
      const auto& span = batch.spans[b][s];
      Utterance utt;
      const int speaker_token = batch.tokens[b][static_cast<std::size_t>(span.start)];
      if (speaker_token == speaker_token_ids.first) utt.speaker = Speaker::agent;
      else if (speaker_token == speaker_token_ids.second) utt.speaker = Speaker::customer;
      else throw DataError("decode_batch: span does not begin at a speaker token");
      utt.tokens.assign(batch.tokens[b].begin() + static_cast<std::ptrdiff_t>(span.start) + 1,
                        batch.tokens[b].begin() + static_cast<std::ptrdiff_t>(span.end));
      const auto& binary = batch.targets[b].utterance_labels[s];
      for (std::size_t a = 0; a < binary.size(); ++a)
        if (binary[a]) utt.labels.push_back(static_cast<int>(a));
      conv.utterances.push_back(std::move(utt));
    }
    out.push_back(std::move(conv));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSONL I/O
// ---------------------------------------------------------------------------

namespace {

void read_jsonl(const std::string& path,
                const std::function<void(const ordered_json&, int)>& per_line) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) {
      if (is.eof()) break;
      throw DataError(path + ": line " + std::to_string(line_no) + ": empty line");
    }
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      per_line(j, line_no);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(path + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw DataError("cannot open " + path + " for writing");
  return os;
}

}  // namespace

void write_conversations_jsonl(const std::string& path, const std::vector<Conversation>& corpus) {
  auto os = open_for_write(path);
  for (const auto& conv : corpus) {
    ordered_json j;
    j["id"] = conv.id;
    j["conv_label"] = conv.conv_label;
    j["utterances"] = ordered_json::array();
    for (const auto& utt : conv.utterances) {
      ordered_json ju;
      ju["speaker"] = utt.speaker == Speaker::agent ? "agent" : "customer";
      ju["tokens"] = utt.tokens;
      ju["labels"] = utt.labels;
      j["utterances"].push_back(std::move(ju));
    }
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed for " + path);
}

std::vector<Conversation> read_conversations_jsonl(const std::string& path) {
  std::vector<Conversation> corpus;
  read_jsonl(path, [&](const ordered_json& j, int line_no) {
    Conversation conv;
    conv.id = j.at("id").get<std::string>();
    conv.conv_label = j.at("conv_label").get<int>();
    for (const auto& ju : j.at("utterances")) {
      Utterance utt;
      const std::string speaker = ju.at("speaker").get<std::string>();
      if (speaker == "agent") utt.speaker = Speaker::agent;
      else if (speaker == "customer") utt.speaker = Speaker::customer;
      else
        throw DataError(path + ": line " + std::to_string(line_no) + ": unknown speaker '" +
                        speaker + "'");
      utt.tokens = ju.at("tokens").get<std::vector<int>>();
      utt.labels = ju.at("labels").get<std::vector<int>>();
      conv.utterances.push_back(std::move(utt));
    }
    corpus.push_back(std::move(conv));
  });
  return corpus;
}

void write_listops_jsonl(const std::string& path, const std::vector<ListOpsExample>& corpus) {
  auto os = open_for_write(path);
  for (const auto& ex : corpus) {
    ordered_json j;
    j["tokens"] = listops_tokens(ex.expr);
    j["label"] = ex.label;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed for " + path);
}

std::vector<ListOpsExample> read_listops_jsonl(const std::string& path) {
  std::vector<ListOpsExample> corpus;
  read_jsonl(path, [&](const ordered_json& j, int) {
    ListOpsExample ex;
    for (int t : j.at("tokens").get<std::vector<int>>())
      ex.expr.push_back(static_cast<char>(t));
    ex.label = j.at("label").get<int>();
    corpus.push_back(std::move(ex));
  });
  return corpus;
}

void write_text_jsonl(const std::string& path, const std::vector<TextExample>& corpus) {
  auto os = open_for_write(path);
  for (const auto& ex : corpus) {
    ordered_json j;
    j["bytes"] = ex.bytes;
    j["label"] = ex.label;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed for " + path);
}

std::vector<TextExample> read_text_jsonl(const std::string& path) {
  std::vector<TextExample> corpus;
  read_jsonl(path, [&](const ordered_json& j, int) {
    corpus.push_back({j.at("bytes").get<std::vector<int>>(), j.at("label").get<int>()});
  });
  return corpus;
}

void write_retrieval_jsonl(const std::string& path, const std::vector<RetrievalPair>& corpus) {
  auto os = open_for_write(path);
  for (const auto& pair : corpus) {
    ordered_json j;
    j["doc_a"] = pair.doc_a;
    j["doc_b"] = pair.doc_b;
    j["label"] = pair.match;
    os << j.dump() << '\n';
  }
  if (!os) throw DataError("write failed for " + path);
}

std::vector<RetrievalPair> read_retrieval_jsonl(const std::string& path) {
  std::vector<RetrievalPair> corpus;
  read_jsonl(path, [&](const ordered_json& j, int) {
    RetrievalPair pair;
    pair.doc_a = j.at("doc_a").get<std::vector<int>>();
    pair.doc_b = j.at("doc_b").get<std::vector<int>>();
    pair.match = j.at("label").get<int>();
    corpus.push_back(std::move(pair));
  });
  return corpus;
}

}  // namespace longconv
