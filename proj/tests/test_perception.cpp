#include <catch2/catch_amalgamated.hpp>

#include <abl/glyphs.hpp>
#include <abl/perception.hpp>

#include <sstream>

using namespace abl;
using glyph::GlyphFamilySpec;
using glyph::GlyphImage;

namespace {

GlyphFamilySpec noise_free(glyph::Family family) {
  GlyphFamilySpec s;
  s.family = family;
  s.max_translate = 0.0;
  s.max_rotate_deg = 0.0;
  s.stroke_widths = {1};
  s.noise_sigma = 0.0;
  return s;
}

struct LabeledGlyphs {
  std::vector<GlyphImage> images;
  std::vector<eqn::Sym> labels;
};

LabeledGlyphs sample(const GlyphFamilySpec& spec, int per_class, Rng& rng) {
  LabeledGlyphs out;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < per_class; ++i) {
      out.images.push_back(glyph::render_glyph(static_cast<eqn::Sym>(c), spec, rng));
      out.labels.push_back(static_cast<eqn::Sym>(c));
    }
  return out;
}

double held_out_separability(const GlyphFamilySpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  LabeledGlyphs train = sample(spec, 200, rng);
  LabeledGlyphs test = sample(spec, 100, rng);
  auto model = perception::PerceptionModel::with_seed(seed ^ 0xabcd);
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.08;
  cfg.epochs = 15;
  cfg.minibatch = 32;
  cfg.seed = seed + 1;
  perception::retrain(model, train.images, train.labels, cfg);
  return perception::perception_accuracy(model, test.images, test.labels);
}

}  // namespace

TEST_CASE("noise-free rendering is exact and binary") {
  auto spec = noise_free(glyph::Family::Easy);
  Rng a(5), b(5);
  for (int c = 0; c < 4; ++c) {
    GlyphImage one = glyph::render_glyph(static_cast<eqn::Sym>(c), spec, a);
    GlyphImage two = glyph::render_glyph(static_cast<eqn::Sym>(c), spec, b);
    REQUIRE(one == two);
    std::size_t lit = 0;
    for (double p : one.pixels) {
      REQUIRE((p == 0.0 || p == 1.0));
      lit += p == 1.0;
    }
    REQUIRE(lit > 4);  // the stroke is actually drawn
  }
}

TEST_CASE("rendering is deterministic given the rng state") {
  auto spec = GlyphFamilySpec::easy(0, 0.2);
  Rng a(123), b(123);
  for (int i = 0; i < 8; ++i) {
    auto sym = static_cast<eqn::Sym>(i % 4);
    REQUIRE(glyph::render_glyph(sym, spec, a) == glyph::render_glyph(sym, spec, b));
  }
  // and pixel values stay in range under heavy noise
  GlyphFamilySpec noisy = GlyphFamilySpec::easy(0, 0.3);
  GlyphImage img = glyph::render_glyph(eqn::Sym::Plus, noisy, a);
  for (double p : img.pixels) REQUIRE((p >= 0.0 && p <= 1.0));
}

TEST_CASE("family separability calibration") {
  const double easy = held_out_separability(GlyphFamilySpec::easy(0), 1);
  REQUIRE(easy >= 0.95);
  const double hard = held_out_separability(GlyphFamilySpec::hard(0), 1);
  REQUIRE(hard >= 0.70);
  REQUIRE(hard <= 0.95);
  REQUIRE(easy >= hard);
}

TEST_CASE("zero-weight perception is uniform and argmax falls to class 0") {
  perception::PerceptionModel model = perception::PerceptionModel::with_seed(1);
  model.net().set_flat_params(std::vector<double>(model.net().param_count(), 0.0));
  Rng rng(7);
  auto batch = sample(GlyphFamilySpec::easy(0), 2, rng);
  auto p = model.perceive(batch.images, 0);
  REQUIRE(p.seq.size() == batch.images.size());
  for (std::size_t i = 0; i < batch.images.size(); ++i) {
    REQUIRE(p.seq.slots[i] == eqn::Sym::D0);
    for (double v : p.probs[i]) REQUIRE(v == Catch::Approx(0.25).margin(1e-12));
  }
  // balanced labels: accuracy equals the class-0 frequency exactly
  REQUIRE(perception::perception_accuracy(model, batch.images, batch.labels) == 0.25);
}

TEST_CASE("a model trained on noise-free prototypes reads them back") {
  auto spec = noise_free(glyph::Family::Easy);
  Rng rng(11);
  auto data = sample(spec, 8, rng);
  auto model = perception::PerceptionModel::with_seed(12);
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 30;
  cfg.minibatch = 8;
  cfg.seed = 13;
  perception::retrain(model, data.images, data.labels, cfg);
  REQUIRE(perception::perception_accuracy(model, data.images, data.labels) == 1.0);

  auto p = model.perceive(data.images, 0);
  for (std::size_t i = 0; i < data.labels.size(); ++i) REQUIRE(p.seq.slots[i] == data.labels[i]);
}

TEST_CASE("perceive of a single image yields a length-one sequence") {
  auto model = perception::PerceptionModel::with_seed(2);
  Rng rng(3);
  auto img = glyph::render_glyph(eqn::Sym::Eq, GlyphFamilySpec::easy(0), rng);
  auto p = model.perceive({img}, 0);
  REQUIRE(p.seq.size() == 1);
  REQUIRE(p.probs.size() == 1);
}

TEST_CASE("retrain on own predictions does not hurt them") {
  Rng rng(21);
  auto data = sample(GlyphFamilySpec::easy(0, 0.05), 20, rng);
  auto model = perception::PerceptionModel::with_seed(22);
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.08;
  cfg.epochs = 25;
  cfg.minibatch = 16;
  cfg.seed = 23;
  perception::retrain(model, data.images, data.labels, cfg);

  // use the model's own argmax as labels, retrain, and check agreement stays
  auto before = model.perceive(data.images, 0);
  std::vector<eqn::Sym> own;
  for (const auto& s : before.seq.slots) own.push_back(*s);
  nn::TrainConfig warm = cfg;
  warm.epochs = 3;
  perception::retrain(model, data.images, own, warm);
  auto after = model.perceive(data.images, 0);
  std::size_t same = 0;
  for (std::size_t i = 0; i < own.size(); ++i)
    if (after.seq.slots[i] == own[i]) ++same;
  REQUIRE(same >= own.size() * 95 / 100);
}

TEST_CASE("a repeated corrective pair is memorized") {
  Rng rng(31);
  auto spec = GlyphFamilySpec::easy(0, 0.05);
  auto img = glyph::render_glyph(eqn::Sym::D1, spec, rng);
  auto model = perception::PerceptionModel::with_seed(32);
  nn::TrainConfig cfg;
  cfg.learning_rate = 0.1;
  cfg.epochs = 40;
  cfg.minibatch = 1;
  cfg.seed = 33;
  // teach the single image an arbitrary corrected label
  perception::retrain(model, {img}, {eqn::Sym::Plus}, cfg);
  auto p = model.perceive({img}, 0);
  REQUIRE(p.seq.slots[0] == eqn::Sym::Plus);
}

TEST_CASE("retrain rejects empty input") {
  auto model = perception::PerceptionModel::with_seed(41);
  REQUIRE_THROWS_AS(perception::retrain(model, {}, {}, nn::TrainConfig{}), std::invalid_argument);
}

TEST_CASE("glyph image blocks round-trip") {
  Rng rng(51);
  auto data = sample(GlyphFamilySpec::hard(0), 3, rng);
  std::ostringstream os(std::ios::binary);
  glyph::write_images(os, data.images);
  std::istringstream is(os.str(), std::ios::binary);
  auto back = glyph::read_images(is);
  REQUIRE(back.size() == data.images.size());
  for (std::size_t i = 0; i < back.size(); ++i) REQUIRE(back[i] == data.images[i]);

  std::istringstream bad("ABLIMG9\nxxxx", std::ios::binary);
  REQUIRE_THROWS_AS(glyph::read_images(bad), FormatError);
}

TEST_CASE("family spec validation") {
  GlyphFamilySpec s;
  s.noise_sigma = 0.5;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = GlyphFamilySpec{};
  s.stroke_widths.clear();
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
  s = GlyphFamilySpec{};
  s.max_translate = -1;
  REQUIRE_THROWS_AS(s.validate(), std::invalid_argument);
}
