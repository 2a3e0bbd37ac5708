#pragma once

// The trial-and-error training loop: subsample, perceive, substitution
// search over blank masks, greedy abduction, perception retraining on the
// abduced symbols, a ring buffer of abduced rule sets as relational
// features, propositionalization, decision training, curriculum stages, and
// the two transfer procedures.

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "abl/common.hpp"
#include "abl/dataset.hpp"
#include "abl/dfo.hpp"
#include "abl/equation.hpp"
#include "abl/perception.hpp"

namespace abl::trainer {

struct RelationalFeature {
  eqn::OpRuleSet rules;
  int created_at_iteration = 0;
  int source_consistency = 0;
};

class FeatureBuffer {
 public:
  explicit FeatureBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 1) throw std::invalid_argument("feature capacity must be >= 1");
  }

  void push(RelationalFeature f) {
    items_.push_back(std::move(f));
    if (items_.size() > capacity_) items_.pop_front();  // oldest first
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

  std::vector<RelationalFeature> snapshot() const {
    return std::vector<RelationalFeature>(items_.begin(), items_.end());
  }

 private:
  std::size_t capacity_;
  std::deque<RelationalFeature> items_;
};

struct AbductiveModel {
  perception::PerceptionModel perception;
  std::vector<RelationalFeature> features;
  nn::Network decision;
};

struct TrainerConfig {
  int iterations = 240;
  int subsample_min = 5;
  int subsample_max = 10;
  int k = 2;
  std::size_t feature_capacity = 20;
  std::vector<std::size_t> curriculum = {5, 6, 7, 8};
  // abduced (image, symbol) pairs from recent iterations are retained and
  // retrained together, which damps oscillation from any one bad batch
  std::size_t replay_capacity = 240;
  // the per-iteration retraining rate anneals as lr/(1 + decay*t): strong
  // while the symbol binding is being established, gentle once settled so a
  // single bad batch cannot yank the model off a good solution
  double perception_lr_decay = 0.01;
  // the minibatch exceeds the replay capacity: full-batch steps keep a tiny
  // unbalanced tail batch from blowing up the shared conv features
  nn::TrainConfig perception_cfg{0.12, 4, 256, 0, 0.0};
  nn::TrainConfig decision_cfg{0.1, 300, 32, 0, 1e-4};
  dfo::DfoConfig dfo_cfg{64, 2, 0.1, 0};
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations < 0) throw std::invalid_argument("iterations must be >= 0");
    if (subsample_min < 1 || subsample_max < subsample_min)
      throw std::invalid_argument("bad subsample range");
    if (k < 2) throw std::invalid_argument("k must be >= 2");
    if (curriculum.empty()) throw std::invalid_argument("curriculum must have stages");
    perception_cfg.validate();
    decision_cfg.validate();
    dfo_cfg.validate();
  }
};

// Evaluation-only accuracy callback, supplied by harness code that is
// allowed to see ground-truth symbol labels. Training decisions never read
// its value.
using PerceptionProbe = std::function<double(const perception::Perceiver&)>;

struct TrainLogRow {
  int iteration = 0;
  std::size_t stage_cap = 0;
  int consistency = 0;
  int subsample_size = 0;
  double perception_accuracy = -1.0;  // -1 when no probe was given
  double wall_ms = 0.0;
};

inline void write_log_csv(const std::vector<TrainLogRow>& rows, std::ostream& os) {
  os << "iteration,stage,consistency,subsample_size,perception_accuracy,wall_time_ms\n";
  for (const auto& r : rows)
    os << r.iteration << ',' << r.stage_cap << ',' << r.consistency << ',' << r.subsample_size
       << ',' << r.perception_accuracy << ',' << r.wall_ms << '\n';
}

inline std::vector<TrainLogRow> read_log_csv(std::istream& is) {
  std::vector<TrainLogRow> rows;
  std::string line;
  if (!std::getline(is, line)) return rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    TrainLogRow r;
    if (std::sscanf(line.c_str(), "%d,%zu,%d,%d,%lf,%lf", &r.iteration, &r.stage_cap,
                    &r.consistency, &r.subsample_size, &r.perception_accuracy, &r.wall_ms) != 6)
      throw FormatError("bad training log line: " + line);
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// substitution search

// One perceived subsample, frozen for the duration of an optimizer call.
struct PerceivedBatch {
  std::vector<const data::EquationInstance*> instances;
  std::vector<perception::Perceived> views;
  std::vector<std::pair<std::size_t, std::size_t>> blocks;  // S ranges per instance
  std::size_t dim = 0;
};

inline PerceivedBatch perceive_batch(const perception::Perceiver& perceiver,
                                     const std::vector<const data::EquationInstance*>& instances) {
  PerceivedBatch out;
  out.instances = instances;
  for (const auto* inst : instances) {
    out.views.push_back(perceiver.perceive(inst->images, 0));
    out.blocks.emplace_back(out.dim, out.dim + inst->length());
    out.dim += inst->length();
  }
  return out;
}

// Blanks every position whose S bit is set, then runs greedy abduction from
// an empty rule set with probability-ordered filling preferences.
inline eqn::AbductionResult abduce_batch(const PerceivedBatch& batch, const dfo::BinaryVector& S) {
  std::vector<eqn::LabeledSeq> examples;
  std::vector<eqn::SeqProbs> probs;
  for (std::size_t i = 0; i < batch.instances.size(); ++i) {
    eqn::LabeledSeq ex;
    ex.positive = batch.instances[i]->label;
    ex.seq = batch.views[i].seq;
    const auto [lo, hi] = batch.blocks[i];
    for (std::size_t p = lo; p < hi; ++p)
      if (S[p]) ex.seq.slots[p - lo] = std::nullopt;
    examples.push_back(std::move(ex));
    probs.push_back(batch.views[i].probs);
  }
  return eqn::abduce(examples, eqn::OpRuleSet{}, &probs);
}

inline int substitution_objective(const PerceivedBatch& batch, const dfo::BinaryVector& S) {
  if (S.size() != batch.dim) throw std::invalid_argument("substitution vector length mismatch");
  return abduce_batch(batch, S).consistency_count();
}

inline int substitution_objective(const perception::Perceiver& perceiver,
                                  const std::vector<const data::EquationInstance*>& instances,
                                  const dfo::BinaryVector& S) {
  return substitution_objective(perceive_batch(perceiver, instances), S);
}

// ---------------------------------------------------------------------------
// feature-constrained abduction (knowledge transfer)

// Completions must be explained by one of the frozen rule sets; no new rules
// are abduced. Fillings are tried in preference order, features in buffer
// order, first commitment wins.
inline eqn::AbductionResult abduce_with_features(const PerceivedBatch& batch,
                                                 const dfo::BinaryVector& S,
                                                 const std::vector<RelationalFeature>& features) {
  eqn::AbductionResult out;
  out.consistent.assign(batch.instances.size(), 0);
  for (std::size_t i = 0; i < batch.instances.size(); ++i) {
    const bool positive = batch.instances[i]->label;
    eqn::SymbolSeq seq = batch.views[i].seq;
    const auto [lo, hi] = batch.blocks[i];
    std::vector<std::size_t> blanks;
    for (std::size_t p = lo; p < hi; ++p)
      if (S[p]) {
        seq.slots[p - lo] = std::nullopt;
        blanks.push_back(p - lo);
      }
    std::vector<std::array<eqn::Sym, 4>> cands;
    for (std::size_t b : blanks)
      cands.push_back(eqn::detail::slot_candidates(&batch.views[i].probs[b]));

    eqn::SymbolSeq filled = seq;
    for (std::size_t j = 0; j < blanks.size(); ++j) filled.slots[blanks[j]] = cands[j][0];
    bool committed = false;
    std::vector<std::size_t> odo(blanks.size(), 0);
    while (!committed) {
      for (std::size_t j = 0; j < blanks.size(); ++j) filled.slots[blanks[j]] = cands[j][odo[j]];
      for (const auto& f : features) {
        eqn::Entail e = eqn::entails(f.rules, filled);
        if (positive ? e == eqn::Entail::True : e == eqn::Entail::False) {
          committed = true;
          break;
        }
      }
      if (committed) break;
      std::size_t j = blanks.size();
      while (j > 0) {
        if (++odo[j - 1] < 4) break;
        odo[j - 1] = 0;
        --j;
      }
      if (j == 0) break;
    }
    if (!committed)
      for (std::size_t j = 0; j < blanks.size(); ++j) filled.slots[blanks[j]] = cands[j][0];
    out.completed.push_back(filled);
    out.consistent[i] = committed ? 1 : 0;
  }
  return out;
}

// ---------------------------------------------------------------------------
// propositionalization

// r_ij = 1 iff feature j's rules make instance i a correct equation (False
// and Unknown both map to 0).
inline std::vector<std::vector<std::uint8_t>> propositionalize(
    const perception::Perceiver& perceiver, const std::vector<RelationalFeature>& features,
    const data::Dataset& dataset) {
  if (features.empty()) throw std::invalid_argument("propositionalize needs at least one feature");
  std::vector<std::vector<std::uint8_t>> rows(dataset.instances.size());
  const unsigned threads = std::min<unsigned>(thread_budget(),
                                              std::max<std::size_t>(std::size_t{1}, dataset.instances.size()));
  auto worker = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto view = perceiver.perceive(dataset.instances[i].images, i);
      std::vector<std::uint8_t> row(features.size(), 0);
      for (std::size_t j = 0; j < features.size(); ++j)
        row[j] = eqn::entails(features[j].rules, view.seq) == eqn::Entail::True ? 1 : 0;
      rows[i] = std::move(row);
    }
  };
  if (threads <= 1) {
    worker(0, rows.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (rows.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(rows.size(), b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return rows;
}

inline std::vector<std::vector<std::uint8_t>> propositionalize(const AbductiveModel& model,
                                                               const data::Dataset& dataset) {
  return propositionalize(model.perception, model.features, dataset);
}

// ---------------------------------------------------------------------------
// the training loop

namespace detail {

struct LoopState {
  perception::PerceptionModel perception;
  FeatureBuffer features;
  Rng rng;
  std::vector<TrainLogRow> log;
  std::deque<std::pair<glyph::GlyphImage, eqn::Sym>> replay;
  int iteration = 0;

  LoopState(perception::PerceptionModel p, std::size_t capacity, std::uint64_t seed)
      : perception(std::move(p)), features(capacity), rng(seed) {}
};

enum class Mode { Scratch, FrozenPerception, FrozenKnowledge };

inline std::vector<const data::EquationInstance*> stage_pool(const data::Dataset& dataset,
                                                             std::size_t cap) {
  std::vector<const data::EquationInstance*> pool;
  for (const auto& inst : dataset.instances)
    if (inst.length() <= cap) pool.push_back(&inst);
  return pool;
}

inline void training_iteration(LoopState& state, const std::vector<const data::EquationInstance*>& pool,
                               std::size_t stage_cap, const TrainerConfig& cfg, Mode mode,
                               const std::vector<RelationalFeature>& frozen_features,
                               const PerceptionProbe* probe) {
  if (pool.empty()) throw std::invalid_argument("no instances available at this curriculum stage");
  const auto t0 = std::chrono::steady_clock::now();

  // uniform subsample without replacement inside one iteration
  const int want = cfg.subsample_min +
                   static_cast<int>(state.rng.below(
                       static_cast<std::uint64_t>(cfg.subsample_max - cfg.subsample_min + 1)));
  const std::size_t size = std::min<std::size_t>(static_cast<std::size_t>(want), pool.size());
  std::vector<std::size_t> idx(pool.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (std::size_t i = 0; i < size; ++i)
    std::swap(idx[i], idx[i + state.rng.below(idx.size() - i)]);
  std::vector<const data::EquationInstance*> subsample;
  for (std::size_t i = 0; i < size; ++i) subsample.push_back(pool[idx[i]]);
  // positives first: the rules they establish let negatives be falsified
  // as perceived instead of through spurious digit flips
  std::stable_partition(subsample.begin(), subsample.end(),
                        [](const data::EquationInstance* e) { return e->label; });

  // the perception snapshot stays frozen during the optimizer call, so the
  // objective is pure and memoizable
  PerceivedBatch batch = perceive_batch(state.perception, subsample);
  dfo::SparsityConstraint constraint;
  constraint.k = cfg.k;
  constraint.blocks = batch.blocks;
  constraint.validate(batch.dim);

  std::map<dfo::BinaryVector, double> memo;
  auto objective = [&](const dfo::BinaryVector& S) {
    auto it = memo.find(S);
    if (it != memo.end()) return it->second;
    const double v = mode == Mode::FrozenKnowledge
                         ? static_cast<double>([&] {
                             auto r = abduce_with_features(batch, S, frozen_features);
                             int n = 0;
                             for (auto c : r.consistent) n += c;
                             return n;
                           }())
                         : static_cast<double>(substitution_objective(batch, S));
    memo.emplace(S, v);
    return v;
  };
  dfo::DfoConfig dcfg = cfg.dfo_cfg;
  dcfg.seed = derive_seed(cfg.seed, 0xD0000 + static_cast<std::uint64_t>(state.iteration));
  auto best = dfo::optimize(objective, batch.dim, constraint, dcfg);

  eqn::AbductionResult abduced = mode == Mode::FrozenKnowledge
                                     ? abduce_with_features(batch, best.best, frozen_features)
                                     : abduce_batch(batch, best.best);
  const int consistency = abduced.consistency_count();

  // an empty or failed abduction carries no usable hypothesis
  if (mode == Mode::Scratch || mode == Mode::FrozenPerception) {
    if (consistency > 0)
      state.features.push({abduced.rules, state.iteration, consistency});
  }

  if (mode != Mode::FrozenPerception && consistency > 0) {
    std::vector<glyph::GlyphImage> images;
    std::vector<eqn::Sym> labels;
    for (std::size_t i = 0; i < subsample.size(); ++i) {
      if (!abduced.consistent[i] || !subsample[i]->label) continue;
      // Only positives supply perception labels. A positive completion must
      // satisfy the arithmetic constraint, which pins its symbols almost
      // uniquely; a negative is explained by any filling that breaks the
      // equation, so its chosen symbols are not evidence about the images.
      for (std::size_t p = 0; p < subsample[i]->images.size(); ++p) {
        images.push_back(subsample[i]->images[p]);
        labels.push_back(*abduced.completed[i].slots[p]);
      }
    }
    if (!images.empty()) {
      if (cfg.replay_capacity > 0) {
        for (std::size_t i = 0; i < images.size(); ++i)
          state.replay.emplace_back(images[i], labels[i]);
        while (state.replay.size() > cfg.replay_capacity) state.replay.pop_front();
        images.clear();
        labels.clear();
        for (const auto& [img, sym] : state.replay) {
          images.push_back(img);
          labels.push_back(sym);
        }
      }
      nn::TrainConfig pc = cfg.perception_cfg;
      pc.learning_rate /= 1.0 + cfg.perception_lr_decay * state.iteration;
      pc.seed = derive_seed(cfg.seed, 0xE0000 + static_cast<std::uint64_t>(state.iteration));
      perception::retrain(state.perception, images, labels, pc);
    }
  }

  TrainLogRow row;
  row.iteration = state.iteration;
  row.stage_cap = stage_cap;
  row.consistency = consistency;
  row.subsample_size = static_cast<int>(size);
  if (probe && *probe) row.perception_accuracy = (*probe)(state.perception);
  row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  state.log.push_back(row);
  ++state.iteration;
}

inline nn::NetworkSpec decision_spec(std::size_t inputs, std::uint64_t seed) {
  nn::NetworkSpec s;
  s.input_shape = {inputs};
  s.layers = {nn::Dense{16}, nn::Activation::Relu, nn::Dense{2}, nn::Activation::Softmax};
  s.seed = seed;
  return s;
}

struct FitOutput {
  AbductiveModel model;
  std::vector<TrainLogRow> log;
};

inline FitOutput run_loop(const data::Dataset& dataset, const TrainerConfig& cfg, Mode mode,
                          perception::PerceptionModel initial_perception,
                          const std::vector<RelationalFeature>& frozen_features,
                          const nn::Network* frozen_decision, const PerceptionProbe* probe) {
  cfg.validate();
  for (std::size_t cap : cfg.curriculum)
    if (stage_pool(dataset, cap).empty())
      throw std::invalid_argument("dataset has no instances for curriculum cap " + std::to_string(cap));

  LoopState state(std::move(initial_perception), cfg.feature_capacity,
                  derive_seed(cfg.seed, 0x5EED));

  const std::size_t stages = cfg.curriculum.size();
  const int per = cfg.iterations / static_cast<int>(stages);
  const int rem = cfg.iterations % static_cast<int>(stages);
  for (std::size_t si = 0; si < stages; ++si) {
    const int iters = per + (static_cast<int>(si) < rem ? 1 : 0);
    auto pool = stage_pool(dataset, cfg.curriculum[si]);
    for (int i = 0; i < iters; ++i)
      training_iteration(state, pool, cfg.curriculum[si], cfg, mode, frozen_features, probe);
  }

  FitOutput out;
  out.model.perception = std::move(state.perception);
  out.log = std::move(state.log);

  if (mode == Mode::FrozenKnowledge) {
    out.model.features = frozen_features;
    out.model.decision = *frozen_decision;
    return out;
  }

  out.model.features = state.features.snapshot();
  auto rows = propositionalize(out.model.perception, out.model.features, dataset);
  nn::Tensor xs = nn::Tensor::zeros({rows.size(), out.model.features.size()});
  std::vector<int> ys(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      xs.values[i * rows[i].size() + j] = rows[i][j];
    ys[i] = dataset.instances[i].label ? 1 : 0;
  }
  out.model.decision = nn::Network(decision_spec(out.model.features.size(), derive_seed(cfg.seed, 0xDEC)));
  nn::TrainConfig dc = cfg.decision_cfg;
  dc.seed = derive_seed(cfg.seed, 0xDEC5EED);
  nn::train_supervised(out.model.decision, xs, ys, dc);
  return out;
}

}  // namespace detail

struct FitResult {
  AbductiveModel model;
  std::vector<TrainLogRow> log;
};

// Learns perception, relational features, and the decision layer from
// labeled equations only.
inline FitResult fit(const data::Dataset& dataset, const TrainerConfig& cfg,
                     const PerceptionProbe* probe = nullptr) {
  auto out = detail::run_loop(dataset, cfg, detail::Mode::Scratch,
                              perception::PerceptionModel::with_seed(derive_seed(cfg.seed, 0xCA1)),
                              {}, nullptr, probe);
  return {std::move(out.model), std::move(out.log)};
}

// Source perception copied and frozen; only features and the decision layer
// are learned.
inline FitResult transfer_perception(const perception::PerceptionModel& source,
                                     const data::Dataset& dataset, const TrainerConfig& cfg,
                                     const PerceptionProbe* probe = nullptr) {
  auto out = detail::run_loop(dataset, cfg, detail::Mode::FrozenPerception, source, {}, nullptr, probe);
  return {std::move(out.model), std::move(out.log)};
}

// Source features and decision layer copied and frozen; perception is
// trained from scratch on symbols abduced against the frozen features.
inline FitResult transfer_knowledge(const std::vector<RelationalFeature>& features,
                                    const nn::Network& decision, const data::Dataset& dataset,
                                    const TrainerConfig& cfg, const PerceptionProbe* probe = nullptr) {
  if (features.empty()) throw std::invalid_argument("knowledge transfer needs source features");
  auto out = detail::run_loop(dataset, cfg, detail::Mode::FrozenKnowledge,
                              perception::PerceptionModel::with_seed(derive_seed(cfg.seed, 0xCA1)),
                              features, &decision, probe);
  return {std::move(out.model), std::move(out.log)};
}

inline bool predict(const AbductiveModel& model, const data::EquationInstance& instance) {
  auto view = model.perception.perceive(instance.images, 0);
  nn::Tensor x = nn::Tensor::zeros({1, model.features.size()});
  for (std::size_t j = 0; j < model.features.size(); ++j)
    x.values[j] = eqn::entails(model.features[j].rules, view.seq) == eqn::Entail::True ? 1.0 : 0.0;
  nn::Tensor out = model.decision.forward(x);
  return out.values[1] > out.values[0];
}

// ---------------------------------------------------------------------------
// model bundle persistence

inline void save_model(const AbductiveModel& model, const std::string& dir,
                       const nlohmann::json& extra = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  model.perception.net().save((fs::path(dir) / "perception.net").string());
  model.decision.save((fs::path(dir) / "decision.net").string());
  {
    std::ofstream f(fs::path(dir) / "features.txt");
    for (std::size_t j = 0; j < model.features.size(); ++j) {
      const auto& feat = model.features[j];
      f << "# feature " << j << " created_at=" << feat.created_at_iteration
        << " consistency=" << feat.source_consistency << '\n'
        << feat.rules.to_text() << '\n';
    }
  }
  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["feature_count"] = model.features.size();
  manifest["checksums"] = {
      {"perception.net", hex64(file_checksum((fs::path(dir) / "perception.net").string()))},
      {"decision.net", hex64(file_checksum((fs::path(dir) / "decision.net").string()))},
      {"features.txt", hex64(file_checksum((fs::path(dir) / "features.txt").string()))}};
  if (!extra.is_null() && !extra.empty()) manifest["run"] = extra;
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << '\n';
}

inline AbductiveModel load_model(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw FormatError("missing model manifest in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
  if (manifest.is_discarded()) throw FormatError("bad model manifest in " + dir);
  if (manifest.at("version").get<int>() != 1) throw VersionError("unsupported model version");
  for (const auto& [file, want] : manifest.at("checksums").items()) {
    const std::string have = hex64(file_checksum((fs::path(dir) / file).string()));
    if (want.get<std::string>() != have) throw FormatError("checksum mismatch for " + file);
  }

  AbductiveModel model;
  model.perception = perception::PerceptionModel(nn::Network::load((fs::path(dir) / "perception.net").string()));
  model.decision = nn::Network::load((fs::path(dir) / "decision.net").string());

  std::ifstream ff(fs::path(dir) / "features.txt");
  if (!ff) throw FormatError("missing features.txt in " + dir);
  std::string line, block;
  RelationalFeature cur;
  bool in_feature = false;
  auto flush = [&]() {
    if (!in_feature) return;
    cur.rules = eqn::OpRuleSet::from_text(block);
    model.features.push_back(cur);
    block.clear();
  };
  while (std::getline(ff, line)) {
    if (line.rfind("# feature", 0) == 0) {
      flush();
      in_feature = true;
      cur = RelationalFeature{};
      std::sscanf(line.c_str(), "# feature %*d created_at=%d consistency=%d",
                  &cur.created_at_iteration, &cur.source_consistency);
    } else if (!line.empty()) {
      block += line;
      block += '\n';
    }
  }
  flush();

  if (model.features.size() != manifest.at("feature_count").get<std::size_t>())
    throw FormatError("feature count disagrees with the bundle manifest");
  return model;
}

}  // namespace abl::trainer
