#pragma once

// Symbol perception: a CNN classifier over glyph images with the fixed
// class-to-symbol binding (output unit i is alphabet symbol i).

#include <memory>
#include <vector>

#include "abl/equation.hpp"
#include "abl/glyphs.hpp"
#include "abl/neural.hpp"

namespace abl::perception {

struct Perceived {
  eqn::SymbolSeq seq;    // argmax classes, ties to the lowest index
  eqn::SeqProbs probs;   // one row per image
};

// Interface so evaluation code can swap in reference readers; the
// instance_hint identifies which dataset instance the images belong to.
class Perceiver {
 public:
  virtual ~Perceiver() = default;
  virtual Perceived perceive(const std::vector<glyph::GlyphImage>& images,
                             std::size_t instance_hint) const = 0;
};

inline nn::NetworkSpec default_perception_spec(std::uint64_t seed) {
  nn::NetworkSpec s;
  s.input_shape = {1, glyph::kGlyphSize, glyph::kGlyphSize};
  s.layers = {nn::Conv2D{8, 3, 1},  nn::Activation::Relu, nn::MaxPool{2},
              nn::Conv2D{16, 3, 1}, nn::Activation::Relu, nn::MaxPool{2},
              nn::Dense{64},        nn::Activation::Relu, nn::Dense{4},
              nn::Activation::Softmax};
  s.seed = seed;
  return s;
}

inline nn::Tensor to_batch(const std::vector<glyph::GlyphImage>& images) {
  nn::Tensor t = nn::Tensor::zeros({images.size(), 1, glyph::kGlyphSize, glyph::kGlyphSize});
  for (std::size_t i = 0; i < images.size(); ++i)
    std::copy(images[i].pixels.begin(), images[i].pixels.end(),
              t.values.begin() + static_cast<long>(i * glyph::kGlyphPixels));
  return t;
}

class PerceptionModel : public Perceiver {
 public:
  PerceptionModel() : net_(default_perception_spec(0)) {}
  explicit PerceptionModel(nn::Network net) : net_(std::move(net)) {
    if (net_.output_dim() != eqn::kNumSymbols) throw ShapeMismatch("perception net must have 4 outputs");
  }
  // Fresh model whose head starts at zero: the untrained model is uniform
  // over classes, so its argmax reading is class 0 (a digit) and blanked
  // slots enumerate candidates in alphabet order.
  static PerceptionModel with_seed(std::uint64_t seed) {
    nn::Network net(default_perception_spec(seed));
    net.zero_final_dense();
    return PerceptionModel(std::move(net));
  }

  const nn::Network& net() const { return net_; }
  nn::Network& net() { return net_; }

  Perceived perceive(const std::vector<glyph::GlyphImage>& images,
                     std::size_t /*instance_hint*/ = 0) const override {
    if (images.empty()) throw std::invalid_argument("perceive needs at least one image");
    nn::Tensor probs = net_.forward(to_batch(images));
    Perceived out;
    out.probs.resize(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      std::size_t best = 0;
      for (std::size_t c = 0; c < eqn::kNumSymbols; ++c) {
        out.probs[i][c] = probs.values[i * eqn::kNumSymbols + c];
        if (out.probs[i][c] > out.probs[i][best]) best = c;
      }
      out.seq.slots.emplace_back(static_cast<eqn::Sym>(best));
    }
    return out;
  }

 private:
  nn::Network net_;
};

// Warm-start supervised training on abduced labels.
inline void retrain(PerceptionModel& model, const std::vector<glyph::GlyphImage>& images,
                    const std::vector<eqn::Sym>& labels, const nn::TrainConfig& cfg) {
  if (images.empty() || images.size() != labels.size())
    throw std::invalid_argument("retrain needs aligned nonempty images and labels");
  std::vector<int> ys(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) ys[i] = static_cast<int>(labels[i]);
  nn::train_supervised(model.net(), to_batch(images), ys, cfg);
}

// Evaluation-only helper; callers are responsible for only feeding it
// ground-truth labels outside the training path.
inline double perception_accuracy(const Perceiver& model, const std::vector<glyph::GlyphImage>& images,
                                  const std::vector<eqn::Sym>& labels) {
  if (images.empty() || images.size() != labels.size())
    throw std::invalid_argument("accuracy needs aligned nonempty images and labels");
  Perceived p = model.perceive(images, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (p.seq.slots[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(images.size());
}

}  // namespace abl::perception
