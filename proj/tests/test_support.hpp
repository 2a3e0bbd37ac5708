#pragma once

// Shared helpers for the test suites: reference perceivers and image
// hashing. The oracle perceiver looks glyph sequences up by pixel content,
// so it works anywhere a real model would without needing instance indices.

#include <abl/common.hpp>
#include <abl/dataset.hpp>
#include <abl/perception.hpp>

#include <map>
#include <stdexcept>
#include <vector>

namespace ablt {

inline std::uint64_t images_hash(const std::vector<abl::glyph::GlyphImage>& images) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& img : images)
    h = abl::fnv1a64(img.pixels.data(), img.pixels.size() * sizeof(double), h);
  return h;
}

inline abl::eqn::SeqProbs one_hot_probs(const abl::eqn::SymbolSeq& seq) {
  abl::eqn::SeqProbs probs;
  for (const auto& slot : seq.slots) {
    abl::eqn::ProbRow row{0.0, 0.0, 0.0, 0.0};
    row[static_cast<std::size_t>(*slot)] = 1.0;
    probs.push_back(row);
  }
  return probs;
}

// Perfect perception: returns the hidden-truth symbols for any instance of
// the datasets it was built from.
class OraclePerceiver : public abl::perception::Perceiver {
 public:
  OraclePerceiver() = default;

  void add(const abl::data::Dataset& data, const abl::data::TruthSidecar& truth) {
    if (data.instances.size() != truth.size())
      throw std::invalid_argument("dataset and sidecar sizes differ");
    for (std::size_t i = 0; i < truth.size(); ++i)
      by_hash_[images_hash(data.instances[i].images)] = truth[i].seq;
  }

  abl::perception::Perceived perceive(const std::vector<abl::glyph::GlyphImage>& images,
                                      std::size_t) const override {
    auto it = by_hash_.find(images_hash(images));
    if (it == by_hash_.end()) throw std::logic_error("oracle perceiver: unknown instance");
    return {it->second, one_hot_probs(it->second)};
  }

 private:
  std::map<std::uint64_t, abl::eqn::SymbolSeq> by_hash_;
};

// Returns one fixed reading regardless of input; probabilities slightly
// favor the fixed symbols so they come first in preference order.
class FixedPerceiver : public abl::perception::Perceiver {
 public:
  explicit FixedPerceiver(abl::eqn::SymbolSeq seq) : seq_(std::move(seq)) {}

  abl::perception::Perceived perceive(const std::vector<abl::glyph::GlyphImage>& images,
                                      std::size_t) const override {
    if (images.size() != seq_.size()) throw std::logic_error("fixed perceiver: length mismatch");
    abl::eqn::SeqProbs probs;
    for (const auto& slot : seq_.slots) {
      abl::eqn::ProbRow row{0.2, 0.2, 0.2, 0.2};
      row[static_cast<std::size_t>(*slot)] = 0.4;
      probs.push_back(row);
    }
    return {seq_, probs};
  }

 private:
  abl::eqn::SymbolSeq seq_;
};

}  // namespace ablt
