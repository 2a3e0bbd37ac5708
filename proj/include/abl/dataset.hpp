#pragma once

// Equation dataset generation (binary addition or xor semantics, either
// glyph family, exact per-length label quotas) and bit-exact persistence.
// Ground-truth symbol sequences live in a sidecar that loaders must request
// explicitly, keeping symbol labels out of the training path.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "abl/common.hpp"
#include "abl/equation.hpp"
#include "abl/glyphs.hpp"
#include "abl/rng.hpp"

namespace abl::data {

struct UnsatisfiableLength : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Semantics { BinaryAdd, Xor };

inline const char* semantics_name(Semantics s) { return s == Semantics::BinaryAdd ? "add" : "xor"; }

inline Semantics semantics_from_name(const std::string& name) {
  if (name == "add") return Semantics::BinaryAdd;
  if (name == "xor") return Semantics::Xor;
  throw std::invalid_argument("unknown semantics '" + name + "'");
}

inline eqn::OpRuleSet truth_table(Semantics s) {
  return s == Semantics::BinaryAdd ? eqn::binary_add_table() : eqn::xor_table();
}

struct EquationInstance {
  std::vector<glyph::GlyphImage> images;
  bool label = false;

  std::size_t length() const { return images.size(); }
};

struct TruthRecord {
  eqn::SymbolSeq seq;
  bool z_corrupted = false;  // provenance: negatives carry a corrupted z
};
using TruthSidecar = std::vector<TruthRecord>;

struct DatasetSpec {
  Semantics semantics = Semantics::BinaryAdd;
  glyph::GlyphFamilySpec glyphs;
  std::vector<std::size_t> lengths;
  std::size_t per_length = 300;
  double positive_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    glyphs.validate();
    if (lengths.empty()) throw std::invalid_argument("need at least one length");
    for (auto l : lengths)
      if (l < 5) throw UnsatisfiableLength("equation length must be >= 5");
    if (per_length < 1) throw std::invalid_argument("per_length must be >= 1");
    if (!(positive_fraction > 0.0 && positive_fraction < 1.0))
      throw std::invalid_argument("positive fraction must lie in (0,1)");
  }
};

struct Dataset {
  DatasetSpec spec;
  std::vector<EquationInstance> instances;
};

struct Generated {
  Dataset data;
  TruthSidecar truth;
};

// ---------------------------------------------------------------------------
// generation

namespace detail {

inline eqn::DigitList random_operand(std::size_t len, Rng& rng) {
  std::vector<std::uint8_t> d(len);
  d[0] = len == 1 ? static_cast<std::uint8_t>(rng.below(2)) : 1;
  for (std::size_t i = 1; i < len; ++i) d[i] = static_cast<std::uint8_t>(rng.below(2));
  return eqn::DigitList(std::move(d));
}

inline eqn::DigitList semantics_result(Semantics s, const eqn::DigitList& x, const eqn::DigitList& y) {
  if (s == Semantics::BinaryAdd) {
    unsigned long long v = x.value() + y.value();
    std::vector<std::uint8_t> d;
    if (v == 0) d.push_back(0);
    while (v) {
      d.insert(d.begin(), static_cast<std::uint8_t>(v & 1));
      v >>= 1;
    }
    return eqn::DigitList(std::move(d));
  }
  // xor: pad to the common width, combine, strip leading zeros
  unsigned long long v = x.value() ^ y.value();
  std::vector<std::uint8_t> d;
  if (v == 0) d.push_back(0);
  while (v) {
    d.insert(d.begin(), static_cast<std::uint8_t>(v & 1));
    v >>= 1;
  }
  return eqn::DigitList(std::move(d));
}

// uniform valid digit list of the same length, different from z_true
inline eqn::DigitList corrupt_result(const eqn::DigitList& z_true, Rng& rng) {
  const std::size_t m = z_true.size();
  if (m == 1) return eqn::DigitList{static_cast<std::uint8_t>(1 - z_true.digits[0])};
  while (true) {
    std::vector<std::uint8_t> d(m);
    d[0] = 1;
    for (std::size_t i = 1; i < m; ++i) d[i] = static_cast<std::uint8_t>(rng.below(2));
    eqn::DigitList z(std::move(d));
    if (!(z == z_true)) return z;
  }
}

inline eqn::SymbolSeq to_sequence(const eqn::DigitList& x, const eqn::DigitList& y,
                                  const eqn::DigitList& z) {
  eqn::SymbolSeq seq;
  for (auto d : x.digits) seq.slots.emplace_back(static_cast<eqn::Sym>(d));
  seq.slots.emplace_back(eqn::Sym::Plus);
  for (auto d : y.digits) seq.slots.emplace_back(static_cast<eqn::Sym>(d));
  seq.slots.emplace_back(eqn::Sym::Eq);
  for (auto d : z.digits) seq.slots.emplace_back(static_cast<eqn::Sym>(d));
  return seq;
}

// column pairings of the zero-padded operands, used by the coverage check
inline void mark_pairs(const eqn::DigitList& x, const eqn::DigitList& y, std::array<bool, 4>& hit) {
  const std::size_t n = std::max(x.size(), y.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint8_t xi = i < x.size() ? x.digits[x.size() - 1 - i] : 0;
    const std::uint8_t yi = i < y.size() ? y.digits[y.size() - 1 - i] : 0;
    hit[static_cast<std::size_t>(eqn::OpRuleSet::index(xi, yi))] = true;
  }
}

inline Generated generate_once(const DatasetSpec& spec, std::uint64_t seed, bool check_coverage) {
  Generated out;
  out.data.spec = spec;
  const eqn::OpRuleSet table = truth_table(spec.semantics);
  Rng master(seed);

  std::array<std::size_t, 4> pair_instances{};  // instances exercising each pair
  std::size_t instance_counter = 0;

  for (std::size_t L : spec.lengths) {
    const std::size_t npos = static_cast<std::size_t>(
        std::llround(static_cast<double>(spec.per_length) * spec.positive_fraction));
    const std::size_t nneg = spec.per_length - npos;
    if (npos == 0 || nneg == 0)
      throw std::invalid_argument("per-length quota leaves one label empty");

    for (std::size_t idx = 0; idx < spec.per_length; ++idx) {
      const bool positive = idx < npos;
      Rng rng(derive_seed(seed, 0x10000 * L + instance_counter));

      if (L < 5 || static_cast<long>(L) - 4 < 1) throw UnsatisfiableLength("length too short");
      const std::size_t max_operand = L - 4;
      eqn::DigitList x, y, z_true;
      bool found = false;
      for (long attempt = 0; attempt < 1000000; ++attempt) {
        const std::size_t lx = 1 + rng.below(max_operand);
        const std::size_t ly = 1 + rng.below(max_operand);
        if (lx + ly + 2 >= L) continue;  // no room for z
        x = random_operand(lx, rng);
        y = random_operand(ly, rng);
        z_true = semantics_result(spec.semantics, x, y);
        if (lx + ly + z_true.size() + 2 == L) {
          found = true;
          break;
        }
      }
      if (!found)
        throw UnsatisfiableLength("no equation of length " + std::to_string(L) + " found for " +
                                  semantics_name(spec.semantics));

      eqn::DigitList z = positive ? z_true : corrupt_result(z_true, rng);
      eqn::SymbolSeq seq = to_sequence(x, y, z);

      // generation-time invariants on the hidden truth
      if (seq.size() != L) throw std::logic_error("generated length mismatch");
      eqn::Entail e = eqn::entails(table, seq);
      if (positive ? e != eqn::Entail::True : e != eqn::Entail::False)
        throw std::logic_error("generated instance disagrees with its label");

      std::array<bool, 4> hit{};
      mark_pairs(x, y, hit);
      for (int p = 0; p < 4; ++p) pair_instances[static_cast<std::size_t>(p)] += hit[static_cast<std::size_t>(p)];

      EquationInstance inst;
      inst.label = positive;
      for (const auto& slot : seq.slots)
        inst.images.push_back(glyph::render_glyph(*slot, spec.glyphs, rng));
      out.data.instances.push_back(std::move(inst));
      out.truth.push_back({std::move(seq), !positive});
      ++instance_counter;
    }
  }

  if (check_coverage) {
    const double n = static_cast<double>(out.data.instances.size());
    for (int p = 0; p < 4; ++p)
      if (static_cast<double>(pair_instances[static_cast<std::size_t>(p)]) < 0.01 * n)
        return Generated{};  // empty: caller resamples the seed
  }
  return out;
}

}  // namespace detail

// Deterministic given spec.seed. Each digit-pair column pairing must appear
// in at least 1% of instances whenever the requested lengths can express all
// pairs (max length >= 6); failing draws resample with a derived seed.
inline Generated generate(const DatasetSpec& spec) {
  spec.validate();
  const std::size_t max_len = *std::max_element(spec.lengths.begin(), spec.lengths.end());
  const bool check_coverage = max_len >= 6;
  std::uint64_t seed = spec.seed;
  for (int attempt = 0; attempt < 64; ++attempt) {
    Generated g = detail::generate_once(spec, seed, check_coverage);
    if (!g.data.instances.empty()) return g;
    seed = derive_seed(seed, 0xC0FFEE + static_cast<std::uint64_t>(attempt));
  }
  throw UnsatisfiableLength("could not satisfy pair coverage for this spec");
}

// ---------------------------------------------------------------------------
// persistence

namespace detail {

inline nlohmann::json spec_to_json(const DatasetSpec& spec) {
  nlohmann::json j;
  j["semantics"] = semantics_name(spec.semantics);
  j["glyphs"] = {{"family", spec.glyphs.family == glyph::Family::Easy ? "easy" : "hard"},
                 {"max_translate", spec.glyphs.max_translate},
                 {"max_rotate_deg", spec.glyphs.max_rotate_deg},
                 {"stroke_widths", spec.glyphs.stroke_widths},
                 {"noise_sigma", spec.glyphs.noise_sigma},
                 {"seed", spec.glyphs.seed}};
  j["lengths"] = spec.lengths;
  j["per_length"] = spec.per_length;
  j["positive_fraction"] = spec.positive_fraction;
  j["seed"] = spec.seed;
  return j;
}

inline DatasetSpec spec_from_json(const nlohmann::json& j) {
  DatasetSpec spec;
  spec.semantics = semantics_from_name(j.at("semantics").get<std::string>());
  const auto& g = j.at("glyphs");
  spec.glyphs.family = g.at("family").get<std::string>() == "easy" ? glyph::Family::Easy
                                                                   : glyph::Family::Hard;
  spec.glyphs.max_translate = g.at("max_translate").get<double>();
  spec.glyphs.max_rotate_deg = g.at("max_rotate_deg").get<double>();
  spec.glyphs.stroke_widths = g.at("stroke_widths").get<std::vector<int>>();
  spec.glyphs.noise_sigma = g.at("noise_sigma").get<double>();
  spec.glyphs.seed = g.at("seed").get<std::uint64_t>();
  spec.lengths = j.at("lengths").get<std::vector<std::size_t>>();
  spec.per_length = j.at("per_length").get<std::size_t>();
  spec.positive_fraction = j.at("positive_fraction").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

}  // namespace detail

inline void save(const Generated& g, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::vector<std::uint64_t> offsets;
  {
    std::ofstream images(fs::path(dir) / "images.bin", std::ios::binary);
    if (!images) throw FormatError("cannot write images.bin");
    for (const auto& inst : g.data.instances) {
      offsets.push_back(static_cast<std::uint64_t>(images.tellp()));
      glyph::write_images(images, inst.images);
    }
  }
  {
    std::ofstream labels(fs::path(dir) / "labels.bin", std::ios::binary);
    for (const auto& inst : g.data.instances)
      labels.put(inst.label ? char(1) : char(0));
  }
  {
    std::ofstream truth(fs::path(dir) / "truth.sidecar");
    for (const auto& rec : g.truth)
      truth << rec.seq.to_string() << '\t' << (rec.z_corrupted ? "neg_corrupted_z" : "pos_exact")
            << '\n';
  }

  nlohmann::json manifest;
  manifest["version"] = 1;
  manifest["spec"] = detail::spec_to_json(g.data.spec);
  manifest["count"] = g.data.instances.size();
  manifest["image_block_offsets"] = offsets;
  manifest["checksums"] = {
      {"images.bin", hex64(file_checksum((fs::path(dir) / "images.bin").string()))},
      {"labels.bin", hex64(file_checksum((fs::path(dir) / "labels.bin").string()))},
      {"truth.sidecar", hex64(file_checksum((fs::path(dir) / "truth.sidecar").string()))}};
  std::ofstream mf(fs::path(dir) / "manifest.json");
  mf << manifest.dump(2) << '\n';
}

namespace detail {

inline nlohmann::json read_manifest(const std::string& dir, bool verify_truth) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw FormatError("missing manifest.json in " + dir);
  nlohmann::json manifest = nlohmann::json::parse(mf, nullptr, false);
  if (manifest.is_discarded()) throw FormatError("bad manifest.json in " + dir);
  if (manifest.at("version").get<int>() != 1) throw VersionError("unsupported dataset version");

  const auto& sums = manifest.at("checksums");
  std::vector<std::string> files = {"images.bin", "labels.bin"};
  if (verify_truth) files.push_back("truth.sidecar");
  for (const auto& f : files) {
    const std::string want = sums.at(f).get<std::string>();
    const std::string have = hex64(file_checksum((fs::path(dir) / f).string()));
    if (want != have) throw FormatError("checksum mismatch for " + f);
  }
  return manifest;
}

}  // namespace detail

// Loads images and equation labels only; the symbol-level truth stays on
// disk unless load_truth is called explicitly.
inline Dataset load(const std::string& dir) {
  namespace fs = std::filesystem;
  nlohmann::json manifest = detail::read_manifest(dir, /*verify_truth=*/false);

  Dataset out;
  out.spec = detail::spec_from_json(manifest.at("spec"));
  const std::size_t count = manifest.at("count").get<std::size_t>();

  std::ifstream images(fs::path(dir) / "images.bin", std::ios::binary);
  std::ifstream labels(fs::path(dir) / "labels.bin", std::ios::binary);
  if (!images || !labels) throw FormatError("missing dataset payload in " + dir);
  for (std::size_t i = 0; i < count; ++i) {
    EquationInstance inst;
    inst.images = glyph::read_images(images);
    int c = labels.get();
    if (c == EOF) throw FormatError("labels.bin is short");
    inst.label = c != 0;
    out.instances.push_back(std::move(inst));
  }
  return out;
}

inline TruthSidecar load_truth(const std::string& dir) {
  namespace fs = std::filesystem;
  detail::read_manifest(dir, /*verify_truth=*/true);
  std::ifstream truth(fs::path(dir) / "truth.sidecar");
  if (!truth) throw FormatError("missing truth.sidecar in " + dir);
  TruthSidecar out;
  std::string line;
  while (std::getline(truth, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw FormatError("bad sidecar line: " + line);
    TruthRecord rec;
    rec.seq = eqn::SymbolSeq::from_string(line.substr(0, tab));
    rec.z_corrupted = line.substr(tab + 1) == "neg_corrupted_z";
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace abl::data
