#include <catch2/catch_amalgamated.hpp>

#include <abl/dataset.hpp>

#include <filesystem>
#include <fstream>
#include <map>

using namespace abl;
using namespace abl::data;

namespace {

DatasetSpec small_spec(Semantics sem, std::uint64_t seed) {
  DatasetSpec spec;
  spec.semantics = sem;
  spec.glyphs = glyph::GlyphFamilySpec::easy(0, 0.05);
  // even lengths 6 and 8 cannot be realized by xor with the leading-zero
  // normalization, so the xor specs use the nearest feasible lengths
  spec.lengths = sem == Semantics::BinaryAdd ? std::vector<std::size_t>{5, 6, 7, 8}
                                             : std::vector<std::size_t>{5, 7, 9, 10};
  spec.per_length = 20;
  spec.seed = seed;
  return spec;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("generated instances match their labels under the ground-truth table") {
  for (Semantics sem : {Semantics::BinaryAdd, Semantics::Xor}) {
    auto g = generate(small_spec(sem, 7));
    REQUIRE(g.data.instances.size() == 80);
    REQUIRE(g.truth.size() == 80);
    const auto table = truth_table(sem);
    for (std::size_t i = 0; i < g.truth.size(); ++i) {
      const auto& rec = g.truth[i];
      REQUIRE(rec.seq.complete());
      REQUIRE(parse_equation(rec.seq).ok);
      eqn::Entail e = eqn::entails(table, rec.seq);
      if (g.data.instances[i].label) {
        REQUIRE(e == eqn::Entail::True);
        REQUIRE_FALSE(rec.z_corrupted);
      } else {
        REQUIRE(e == eqn::Entail::False);
        REQUIRE(rec.z_corrupted);
      }
      REQUIRE(g.data.instances[i].length() == rec.seq.size());
    }
  }
}

TEST_CASE("length-5 addition instances behave like the worked example") {
  DatasetSpec spec = small_spec(Semantics::BinaryAdd, 3);
  spec.lengths = {5};
  spec.per_length = 30;
  auto g = generate(spec);
  for (std::size_t i = 0; i < g.truth.size(); ++i) {
    const auto& seq = g.truth[i].seq;
    REQUIRE(seq.size() == 5);
    auto p = parse_equation(seq);
    REQUIRE(p.ok);
    const bool arithmetic = p.eq.x.value() + p.eq.y.value() == p.eq.z.value();
    REQUIRE(arithmetic == g.data.instances[i].label);
  }
}

TEST_CASE("label quotas are exact per length stratum") {
  auto g = generate(small_spec(Semantics::BinaryAdd, 11));
  std::map<std::size_t, std::pair<int, int>> counts;  // length -> (pos, neg)
  for (std::size_t i = 0; i < g.data.instances.size(); ++i) {
    auto& c = counts[g.data.instances[i].length()];
    (g.data.instances[i].label ? c.first : c.second) += 1;
  }
  REQUIRE(counts.size() == 4);
  for (const auto& [len, c] : counts) {
    REQUIRE(c.first == 10);
    REQUIRE(c.second == 10);
  }
}

TEST_CASE("regeneration is deterministic") {
  auto a = generate(small_spec(Semantics::Xor, 21));
  auto b = generate(small_spec(Semantics::Xor, 21));
  REQUIRE(a.data.instances.size() == b.data.instances.size());
  for (std::size_t i = 0; i < a.data.instances.size(); ++i) {
    REQUIRE(a.data.instances[i].label == b.data.instances[i].label);
    REQUIRE(a.data.instances[i].images == b.data.instances[i].images);
    REQUIRE(a.truth[i].seq == b.truth[i].seq);
  }
  auto c = generate(small_spec(Semantics::Xor, 22));
  bool any_diff = false;
  for (std::size_t i = 0; i < a.truth.size() && !any_diff; ++i)
    any_diff = !(a.truth[i].seq == c.truth[i].seq);
  REQUIRE(any_diff);
}

TEST_CASE("every digit pair is exercised by at least 1% of training instances") {
  auto g = generate(small_spec(Semantics::BinaryAdd, 31));
  std::array<int, 4> count{};
  for (const auto& rec : g.truth) {
    auto p = parse_equation(rec.seq);
    REQUIRE(p.ok);
    std::array<bool, 4> hit{};
    const auto& x = p.eq.x;
    const auto& y = p.eq.y;
    const std::size_t n = std::max(x.size(), y.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint8_t xi = i < x.size() ? x.digits[x.size() - 1 - i] : 0;
      const std::uint8_t yi = i < y.size() ? y.digits[y.size() - 1 - i] : 0;
      hit[static_cast<std::size_t>(eqn::OpRuleSet::index(xi, yi))] = true;
    }
    for (int k = 0; k < 4; ++k) count[static_cast<std::size_t>(k)] += hit[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < 4; ++k)
    REQUIRE(count[static_cast<std::size_t>(k)] >= static_cast<int>(g.truth.size() / 100));
}

TEST_CASE("infeasible lengths are rejected") {
  DatasetSpec spec = small_spec(Semantics::BinaryAdd, 41);
  spec.lengths = {4, 5};
  REQUIRE_THROWS_AS(generate(spec), UnsatisfiableLength);
}

TEST_CASE("save and load round-trip bit-exactly") {
  auto g = generate(small_spec(Semantics::BinaryAdd, 51));
  auto dir = temp_dir("abl_ds_roundtrip");
  save(g, dir.string());

  Dataset back = load(dir.string());
  REQUIRE(back.instances.size() == g.data.instances.size());
  REQUIRE(back.spec.semantics == g.data.spec.semantics);
  REQUIRE(back.spec.seed == g.data.spec.seed);
  for (std::size_t i = 0; i < back.instances.size(); ++i) {
    REQUIRE(back.instances[i].label == g.data.instances[i].label);
    REQUIRE(back.instances[i].images == g.data.instances[i].images);
  }

  TruthSidecar truth = load_truth(dir.string());
  REQUIRE(truth.size() == g.truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) {
    REQUIRE(truth[i].seq == g.truth[i].seq);
    REQUIRE(truth[i].z_corrupted == g.truth[i].z_corrupted);
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("truncated payloads and stale checksums are rejected") {
  DatasetSpec spec = small_spec(Semantics::BinaryAdd, 61);
  spec.lengths = {5};
  spec.per_length = 6;
  auto g = generate(spec);
  auto dir = temp_dir("abl_ds_corrupt");
  save(g, dir.string());

  // truncate images.bin
  auto img_path = (dir / "images.bin").string();
  auto bytes = read_file_bytes(img_path);
  {
    std::ofstream f(img_path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 32));
  }
  REQUIRE_THROWS_AS(load(dir.string()), FormatError);

  // restore payload, then stale-edit the manifest
  {
    std::ofstream f(img_path, std::ios::binary);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  REQUIRE_NOTHROW(load(dir.string()));
  {
    std::ofstream truth(dir / "truth.sidecar", std::ios::app);
    truth << "1+1=1\tpos_exact\n";
  }
  REQUIRE_THROWS_AS(load_truth(dir.string()), FormatError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("spec validation") {
  DatasetSpec spec = small_spec(Semantics::BinaryAdd, 71);
  spec.positive_fraction = 0.0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(Semantics::BinaryAdd, 71);
  spec.lengths.clear();
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(Semantics::BinaryAdd, 71);
  spec.per_length = 0;
  REQUIRE_THROWS_AS(spec.validate(), std::invalid_argument);
  REQUIRE_THROWS_AS(semantics_from_name("mul"), std::invalid_argument);
}
