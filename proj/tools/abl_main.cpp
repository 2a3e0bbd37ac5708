// Experiment harness: dataset generation, training (scratch and both
// transfer modes), evaluation by equation length, and report tables
// derived from training logs and evaluation CSVs. Every command writes a
// run manifest capturing flags, seeds, and output checksums.

#include <CLI11.hpp>
#include <json.hpp>

#include <abl/common.hpp>
#include <abl/dataset.hpp>
#include <abl/trainer.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace abl;

namespace {

constexpr const char* kVersion = "abl 0.1.0";

std::vector<std::size_t> parse_lengths(const std::string& text) {
  std::vector<std::size_t> out;
  const auto dots = text.find("..");
  if (dots != std::string::npos) {
    const std::size_t lo = std::stoul(text.substr(0, dots));
    const std::size_t hi = std::stoul(text.substr(dots + 2));
    if (hi < lo) throw CLI::ValidationError("--lengths", "range upper bound below lower bound");
    for (std::size_t l = lo; l <= hi; ++l) out.push_back(l);
    return out;
  }
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    out.push_back(std::stoul(text.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  if (out.empty()) throw CLI::ValidationError("--lengths", "no lengths given");
  return out;
}

std::pair<int, int> parse_span(const std::string& text, const char* flag) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) {
    const int v = std::stoi(text);
    return {v, v};
  }
  const int lo = std::stoi(text.substr(0, dots));
  const int hi = std::stoi(text.substr(dots + 2));
  if (hi < lo) throw CLI::ValidationError(flag, "range upper bound below lower bound");
  return {lo, hi};
}

struct ManifestWriter {
  nlohmann::json j;
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

  ManifestWriter(const std::string& command, int argc, char** argv) {
    j["version"] = kVersion;
    j["command"] = command;
    nlohmann::json args = nlohmann::json::array();
    for (int i = 0; i < argc; ++i) args.push_back(argv[i]);
    j["argv"] = args;
  }

  void add_output(const std::string& path) {
    j["outputs"][path] = hex64(file_checksum(path));
  }

  void write(const std::string& path) {
    j["wall_clock_ms"] =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    std::ofstream f(path);
    f << j.dump(2) << '\n';
  }
};

// held-out labeled glyphs for perception-accuracy logging; evaluation-only
struct ProbeSet {
  std::vector<glyph::GlyphImage> images;
  std::vector<eqn::Sym> labels;

  static ProbeSet make(const glyph::GlyphFamilySpec& family, std::uint64_t seed, int per_class) {
    ProbeSet p;
    Rng rng(derive_seed(seed, 0x9909));
    for (int c = 0; c < 4; ++c)
      for (int i = 0; i < per_class; ++i) {
        p.images.push_back(glyph::render_glyph(static_cast<eqn::Sym>(c), family, rng));
        p.labels.push_back(static_cast<eqn::Sym>(c));
      }
    return p;
  }

  trainer::PerceptionProbe probe() const {
    return [this](const perception::Perceiver& model) {
      return perception::perception_accuracy(model, images, labels);
    };
  }
};

// ---------------------------------------------------------------------------

struct GenDataArgs {
  std::string semantics = "add";
  std::string glyphs = "easy";
  std::string lengths = "5..8";
  std::size_t per_length = 300;
  double positive_fraction = 0.5;
  double noise = -1.0;  // family default unless given
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_gen_data(const GenDataArgs& a, int argc, char** argv) {
  ManifestWriter manifest("gen-data", argc, argv);

  data::DatasetSpec spec;
  spec.semantics = data::semantics_from_name(a.semantics);
  if (a.glyphs == "easy")
    spec.glyphs = glyph::GlyphFamilySpec::easy(derive_seed(a.seed, 0x61), a.noise < 0 ? 0.1 : a.noise);
  else if (a.glyphs == "hard")
    spec.glyphs = glyph::GlyphFamilySpec::hard(derive_seed(a.seed, 0x61), a.noise < 0 ? 0.25 : a.noise);
  else
    throw CLI::ValidationError("--glyphs", "must be easy or hard");
  spec.lengths = parse_lengths(a.lengths);
  spec.per_length = a.per_length;
  spec.positive_fraction = a.positive_fraction;
  spec.seed = a.seed;

  auto generated = data::generate(spec);
  data::save(generated, a.out);

  manifest.j["config"] = {{"semantics", a.semantics}, {"glyphs", a.glyphs},
                          {"lengths", a.lengths},     {"per_length", a.per_length},
                          {"positive_fraction", a.positive_fraction},
                          {"noise", spec.glyphs.noise_sigma}, {"seed", a.seed}};
  for (const char* f : {"manifest.json", "images.bin", "labels.bin", "truth.sidecar"})
    manifest.add_output((fs::path(a.out) / f).string());
  manifest.write((fs::path(a.out) / "run_manifest.json").string());
  std::cout << "wrote " << generated.data.instances.size() << " instances to " << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string data;
  std::string out;
  int iters = 240;
  std::string subsample = "5..10";
  int k = 2;
  std::size_t features = 20;
  std::string curriculum = "5..8";
  std::uint64_t seed = 1;
  double perception_lr = 0.12;
  int perception_epochs = 4;
  double decision_lr = 0.1;
  int decision_epochs = 300;
  std::size_t dfo_budget = 64;
  double dfo_lambda = 0.1;
  bool freeze_perception = false;
  bool freeze_knowledge = false;
  std::string from;
};

int cmd_train(const TrainArgs& a, int argc, char** argv) {
  ManifestWriter manifest("train", argc, argv);
  if (a.freeze_perception && a.freeze_knowledge)
    throw CLI::ValidationError("--freeze-knowledge", "choose at most one transfer mode");
  if ((a.freeze_perception || a.freeze_knowledge) && a.from.empty())
    throw CLI::ValidationError("--from", "transfer modes need a source model");

  data::Dataset dataset = data::load(a.data);

  trainer::TrainerConfig cfg;
  cfg.iterations = a.iters;
  std::tie(cfg.subsample_min, cfg.subsample_max) = parse_span(a.subsample, "--subsample");
  cfg.k = a.k;
  cfg.feature_capacity = a.features;
  cfg.curriculum = parse_lengths(a.curriculum);
  cfg.perception_cfg.learning_rate = a.perception_lr;
  cfg.perception_cfg.epochs = a.perception_epochs;
  cfg.decision_cfg.learning_rate = a.decision_lr;
  cfg.decision_cfg.epochs = a.decision_epochs;
  cfg.dfo_cfg.budget = a.dfo_budget;
  cfg.dfo_cfg.lambda = a.dfo_lambda;
  cfg.seed = a.seed;
  cfg.validate();

  ProbeSet probe_set = ProbeSet::make(dataset.spec.glyphs, dataset.spec.seed, 50);
  trainer::PerceptionProbe probe = probe_set.probe();

  trainer::FitResult result = [&] {
    if (a.freeze_perception) {
      auto source = trainer::load_model(a.from);
      return trainer::transfer_perception(source.perception, dataset, cfg, &probe);
    }
    if (a.freeze_knowledge) {
      auto source = trainer::load_model(a.from);
      return trainer::transfer_knowledge(source.features, source.decision, dataset, cfg, &probe);
    }
    return trainer::fit(dataset, cfg, &probe);
  }();

  nlohmann::json run = {{"data", a.data},
                        {"iters", a.iters},
                        {"subsample", a.subsample},
                        {"k", a.k},
                        {"features", a.features},
                        {"curriculum", a.curriculum},
                        {"seed", a.seed},
                        {"mode", a.freeze_perception   ? "transfer_perception"
                                 : a.freeze_knowledge ? "transfer_knowledge"
                                                       : "scratch"},
                        {"from", a.from}};
  trainer::save_model(result.model, a.out, run);
  {
    std::ofstream log(fs::path(a.out) / "training_log.csv");
    trainer::write_log_csv(result.log, log);
  }

  manifest.j["config"] = run;
  for (const char* f : {"perception.net", "decision.net", "features.txt", "training_log.csv"})
    manifest.add_output((fs::path(a.out) / f).string());
  manifest.write((fs::path(a.out) / "run_manifest.json").string());

  int full = 0;
  for (const auto& row : result.log)
    if (row.consistency == row.subsample_size) ++full;
  std::cout << "trained " << result.log.size() << " iterations, " << result.model.features.size()
            << " features, " << full << " fully consistent subsamples\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string model;
  std::string data;
  std::string out;
};

int cmd_eval(const EvalArgs& a, int argc, char** argv) {
  ManifestWriter manifest("eval", argc, argv);
  auto model = trainer::load_model(a.model);
  auto dataset = data::load(a.data);

  std::map<std::size_t, std::pair<std::size_t, std::size_t>> by_length;  // length -> (n, correct)
  std::size_t total = 0, correct = 0;
  for (const auto& inst : dataset.instances) {
    const bool pred = trainer::predict(model, inst);
    auto& cell = by_length[inst.length()];
    ++cell.first;
    ++total;
    if (pred == inst.label) {
      ++cell.second;
      ++correct;
    }
  }

  auto stderr_of = [](double p, std::size_t n) {
    return n ? std::sqrt(p * (1.0 - p) / static_cast<double>(n)) : 0.0;
  };
  std::ofstream out(a.out);
  if (!out) throw FormatError("cannot write " + a.out);
  out << "length,n,accuracy,stderr\n";
  for (const auto& [len, cell] : by_length) {
    const double acc = static_cast<double>(cell.second) / static_cast<double>(cell.first);
    out << len << ',' << cell.first << ',' << acc << ',' << stderr_of(acc, cell.first) << '\n';
  }
  const double acc = total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
  out << "all," << total << ',' << acc << ',' << stderr_of(acc, total) << '\n';
  out.close();

  manifest.j["config"] = {{"model", a.model}, {"data", a.data}};
  manifest.add_output(a.out);
  manifest.write(a.out + ".manifest.json");
  std::cout << "overall accuracy " << acc << " over " << total << " instances\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct ReportArgs {
  std::vector<std::string> logs;
  std::vector<std::string> evals;
  std::string out;
};

int cmd_report(const ReportArgs& a, int argc, char** argv) {
  ManifestWriter manifest("report", argc, argv);
  if (a.logs.empty() && a.evals.empty())
    throw CLI::ValidationError("--log", "report needs at least one input");
  fs::create_directories(a.out);

  std::vector<std::pair<std::string, std::vector<trainer::TrainLogRow>>> logs;
  for (const auto& path : a.logs) {
    std::ifstream f(path);
    if (!f) throw FormatError("cannot open " + path);
    auto rows = trainer::read_log_csv(f);
    if (rows.empty()) throw FormatError("training log is empty: " + path);
    logs.emplace_back(path, std::move(rows));
  }

  std::vector<std::string> written;
  if (!logs.empty()) {
    {
      std::ofstream f(fs::path(a.out) / "perception_vs_iteration.csv");
      f << "log,iteration,stage,perception_accuracy\n";
      for (const auto& [path, rows] : logs)
        for (const auto& r : rows)
          f << path << ',' << r.iteration << ',' << r.stage_cap << ',' << r.perception_accuracy
            << '\n';
      written.push_back("perception_vs_iteration.csv");
    }
    {
      // one row per abduction trial: perception accuracy vs batch
      // consistency with a success flag for fully consistent subsamples
      std::ofstream f(fs::path(a.out) / "scatter.csv");
      f << "log,iteration,perception_accuracy,consistency,subsample_size,success\n";
      for (const auto& [path, rows] : logs)
        for (const auto& r : rows)
          f << path << ',' << r.iteration << ',' << r.perception_accuracy << ',' << r.consistency
            << ',' << r.subsample_size << ',' << (r.consistency == r.subsample_size ? 1 : 0)
            << '\n';
      written.push_back("scatter.csv");
    }
    {
      std::ofstream f(fs::path(a.out) / "convergence.csv");
      f << "log,iterations,first_full_consistency_iteration,final_perception_accuracy\n";
      for (const auto& [path, rows] : logs) {
        int first_full = -1;
        for (const auto& r : rows)
          if (r.consistency == r.subsample_size) {
            first_full = r.iteration;
            break;
          }
        f << path << ',' << rows.size() << ',' << first_full << ','
          << rows.back().perception_accuracy << '\n';
      }
      written.push_back("convergence.csv");
    }
  }
  if (!a.evals.empty()) {
    std::ofstream f(fs::path(a.out) / "accuracy_by_length.csv");
    f << "eval,length,n,accuracy,stderr\n";
    for (const auto& path : a.evals) {
      std::ifstream in(path);
      if (!in) throw FormatError("cannot open " + path);
      std::string line;
      std::getline(in, line);  // header
      bool any = false;
      while (std::getline(in, line))
        if (!line.empty()) {
          f << path << ',' << line << '\n';
          any = true;
        }
      if (!any) throw FormatError("evaluation csv is empty: " + path);
    }
    written.push_back("accuracy_by_length.csv");
  }

  manifest.j["config"] = {{"logs", a.logs}, {"evals", a.evals}};
  for (const auto& f : written) manifest.add_output((fs::path(a.out) / f).string());
  manifest.write((fs::path(a.out) / "run_manifest.json").string());
  std::cout << "wrote " << written.size() << " report tables to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abductive equation learning harness"};
  app.require_subcommand(1);

  GenDataArgs gen;
  auto* cgen = app.add_subcommand("gen-data", "generate an equation dataset");
  cgen->add_option("--semantics", gen.semantics, "add or xor")->capture_default_str();
  cgen->add_option("--glyphs", gen.glyphs, "easy or hard")->capture_default_str();
  cgen->add_option("--lengths", gen.lengths, "range A..B or comma list")->capture_default_str();
  cgen->add_option("--per-length", gen.per_length, "instances per length")->capture_default_str();
  cgen->add_option("--positive-fraction", gen.positive_fraction)->capture_default_str();
  cgen->add_option("--noise", gen.noise, "glyph noise sigma (family default if omitted)");
  cgen->add_option("--seed", gen.seed)->capture_default_str();
  cgen->add_option("--out", gen.out, "output directory")->required();

  TrainArgs tr;
  auto* ctrain = app.add_subcommand("train", "train a model");
  ctrain->add_option("--data", tr.data, "dataset directory")->required();
  ctrain->add_option("--out", tr.out, "model bundle directory")->required();
  ctrain->add_option("--iters", tr.iters)->capture_default_str();
  ctrain->add_option("--subsample", tr.subsample, "size range lo..hi")->capture_default_str();
  ctrain->add_option("--k", tr.k, "substitutions per equation")->capture_default_str();
  ctrain->add_option("--features", tr.features, "relational feature capacity")->capture_default_str();
  ctrain->add_option("--curriculum", tr.curriculum, "stage length caps")->capture_default_str();
  ctrain->add_option("--seed", tr.seed)->capture_default_str();
  ctrain->add_option("--perception-lr", tr.perception_lr)->capture_default_str();
  ctrain->add_option("--perception-epochs", tr.perception_epochs)->capture_default_str();
  ctrain->add_option("--decision-lr", tr.decision_lr)->capture_default_str();
  ctrain->add_option("--decision-epochs", tr.decision_epochs)->capture_default_str();
  ctrain->add_option("--dfo-budget", tr.dfo_budget)->capture_default_str();
  ctrain->add_option("--dfo-lambda", tr.dfo_lambda)->capture_default_str();
  ctrain->add_flag("--freeze-perception", tr.freeze_perception,
                   "copy and freeze perception from --from");
  ctrain->add_flag("--freeze-knowledge", tr.freeze_knowledge,
                   "copy and freeze features and decision layer from --from");
  ctrain->add_option("--from", tr.from, "source model for transfer modes");

  EvalArgs ev;
  auto* ceval = app.add_subcommand("eval", "evaluate a model by equation length");
  ceval->add_option("--model", ev.model)->required();
  ceval->add_option("--data", ev.data)->required();
  ceval->add_option("--out", ev.out, "output csv")->required();

  ReportArgs rep;
  auto* creport = app.add_subcommand("report", "summarize logs and evaluations");
  creport->add_option("--log", rep.logs, "training log csv (repeatable)");
  creport->add_option("--eval", rep.evals, "evaluation csv (repeatable)");
  creport->add_option("--out", rep.out, "output directory")->required();

  try {
    app.parse(argc, argv);
    if (app.got_subcommand(cgen)) return cmd_gen_data(gen, argc, argv);
    if (app.got_subcommand(ctrain)) return cmd_train(tr, argc, argv);
    if (app.got_subcommand(ceval)) return cmd_eval(ev, argc, argv);
    return cmd_report(rep, argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // 0 for --help, 1 for flag errors
  } catch (const data::UnsatisfiableLength& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
