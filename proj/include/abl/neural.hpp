#pragma once

// Minimal dense/conv network substrate: 64-bit floats, explicit loops,
// plain SGD. Big enough for the 16x16 glyph classifier and the decision
// MLP, small enough to finite-difference every parameter.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "abl/common.hpp"
#include "abl/rng.hpp"

namespace abl::nn {

// ---------------------------------------------------------------------------
// Tensors: row-major, shape-checked at layer boundaries

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
    if (values.size() != element_count(shape)) throw ShapeMismatch("tensor value count does not match shape");
  }

  static std::size_t element_count(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = element_count(s);
    return Tensor(std::move(s), std::vector<double>(n, 0.0));
  }

  std::size_t size() const { return values.size(); }
  bool operator==(const Tensor& o) const { return shape == o.shape && values == o.values; }
};

// ---------------------------------------------------------------------------
// Specs

struct Conv2D {
  std::size_t filters = 1, kernel = 3, stride = 1;
};
struct MaxPool {
  std::size_t size = 2;
};
struct Dense {
  std::size_t units = 1;
};
enum class Activation { Relu, Sigmoid, Softmax };

using LayerSpec = std::variant<Conv2D, MaxPool, Dense, Activation>;

struct NetworkSpec {
  std::vector<std::size_t> input_shape;  // [c,h,w] for conv stacks, [d] for MLPs
  std::vector<LayerSpec> layers;
  std::uint64_t seed = 0;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 10;
  int minibatch = 16;
  std::uint64_t seed = 0;
  double l2 = 0.0;

  void validate() const {
    if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be > 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (minibatch < 1) throw std::invalid_argument("minibatch must be >= 1");
    if (l2 < 0) throw std::invalid_argument("l2 must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Layers

namespace detail {

struct ConvLayer {
  std::size_t in_c, in_h, in_w, out_c, k, stride, out_h, out_w;
  std::vector<double> w;  // [out_c][in_c][k][k]
  std::vector<double> b;  // [out_c]
  std::vector<double> gw, gb;
};

struct PoolLayer {
  std::size_t c, in_h, in_w, size, out_h, out_w;
};

struct DenseLayer {
  std::size_t in_dim, out_dim;
  std::vector<double> w;  // [out][in]
  std::vector<double> b;
  std::vector<double> gw, gb;
};

struct ActLayer {
  Activation fn;
};

using Layer = std::variant<ConvLayer, PoolLayer, DenseLayer, ActLayer>;

}  // namespace detail

// ---------------------------------------------------------------------------
// Network

class Network {
 public:
  Network() = default;

  explicit Network(const NetworkSpec& spec) : spec_(spec) {
    Rng rng(spec.seed);
    std::vector<std::size_t> shape = spec.input_shape;
    if (shape.empty()) throw ShapeMismatch("input shape must be nonempty");
    bool softmax_seen = false;
    for (const auto& ls : spec.layers) {
      if (softmax_seen) throw ShapeMismatch("no layer may follow the final softmax");
      if (const auto* c = std::get_if<Conv2D>(&ls)) {
        if (shape.size() != 3) throw ShapeMismatch("conv layer needs [c,h,w] input");
        detail::ConvLayer l;
        l.in_c = shape[0];
        l.in_h = shape[1];
        l.in_w = shape[2];
        l.out_c = c->filters;
        l.k = c->kernel;
        l.stride = c->stride;
        if (l.k == 0 || l.stride == 0 || l.k > l.in_h || l.k > l.in_w)
          throw ShapeMismatch("conv kernel does not fit input");
        l.out_h = (l.in_h - l.k) / l.stride + 1;
        l.out_w = (l.in_w - l.k) / l.stride + 1;
        const double a = std::sqrt(6.0 / double(l.in_c * l.k * l.k + l.out_c * l.k * l.k));
        l.w.resize(l.out_c * l.in_c * l.k * l.k);
        for (auto& v : l.w) v = rng.uniform(-a, a);
        l.b.assign(l.out_c, 0.0);
        shape = {l.out_c, l.out_h, l.out_w};
        layers_.push_back(std::move(l));
      } else if (const auto* p = std::get_if<MaxPool>(&ls)) {
        if (shape.size() != 3) throw ShapeMismatch("pool layer needs [c,h,w] input");
        detail::PoolLayer l;
        l.c = shape[0];
        l.in_h = shape[1];
        l.in_w = shape[2];
        l.size = p->size;
        if (l.size == 0 || l.size > l.in_h || l.size > l.in_w)
          throw ShapeMismatch("pool window does not fit input");
        l.out_h = l.in_h / l.size;
        l.out_w = l.in_w / l.size;
        shape = {l.c, l.out_h, l.out_w};
        layers_.push_back(l);
      } else if (const auto* d = std::get_if<Dense>(&ls)) {
        detail::DenseLayer l;
        l.in_dim = Tensor::element_count(shape);
        l.out_dim = d->units;
        if (l.out_dim == 0) throw ShapeMismatch("dense layer needs units >= 1");
        const double a = std::sqrt(6.0 / double(l.in_dim + l.out_dim));
        l.w.resize(l.out_dim * l.in_dim);
        for (auto& v : l.w) v = rng.uniform(-a, a);
        l.b.assign(l.out_dim, 0.0);
        shape = {l.out_dim};
        layers_.push_back(std::move(l));
      } else {
        const Activation a = std::get<Activation>(ls);
        layers_.push_back(detail::ActLayer{a});
        if (a == Activation::Softmax) {
          if (shape.size() != 1) throw ShapeMismatch("softmax expects a flat input");
          softmax_seen = true;
        }
      }
    }
    output_dim_ = Tensor::element_count(shape);
    ends_with_softmax_ = softmax_seen;
  }

  const NetworkSpec& spec() const { return spec_; }
  std::size_t output_dim() const { return output_dim_; }
  bool ends_with_softmax() const { return ends_with_softmax_; }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) {
      if (const auto* c = std::get_if<detail::ConvLayer>(&l)) n += c->w.size() + c->b.size();
      if (const auto* d = std::get_if<detail::DenseLayer>(&l)) n += d->w.size() + d->b.size();
    }
    return n;
  }

  std::vector<double> flat_params() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& l : layers_) {
      if (const auto* c = std::get_if<detail::ConvLayer>(&l)) {
        out.insert(out.end(), c->w.begin(), c->w.end());
        out.insert(out.end(), c->b.begin(), c->b.end());
      } else if (const auto* d = std::get_if<detail::DenseLayer>(&l)) {
        out.insert(out.end(), d->w.begin(), d->w.end());
        out.insert(out.end(), d->b.begin(), d->b.end());
      }
    }
    return out;
  }

  // Zeroes the last dense layer so the network's outputs start uniform.
  void zero_final_dense() {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
      if (auto* d = std::get_if<detail::DenseLayer>(&*it)) {
        std::fill(d->w.begin(), d->w.end(), 0.0);
        std::fill(d->b.begin(), d->b.end(), 0.0);
        return;
      }
    }
  }

  void set_flat_params(const std::vector<double>& p) {
    if (p.size() != param_count()) throw ShapeMismatch("parameter count mismatch");
    std::size_t i = 0;
    for (auto& l : layers_) {
      if (auto* c = std::get_if<detail::ConvLayer>(&l)) {
        for (auto& v : c->w) v = p[i++];
        for (auto& v : c->b) v = p[i++];
      } else if (auto* d = std::get_if<detail::DenseLayer>(&l)) {
        for (auto& v : d->w) v = p[i++];
        for (auto& v : d->b) v = p[i++];
      }
    }
  }

  // Forward pass over a batch whose leading dimension is the batch size.
  Tensor forward(const Tensor& batch) const { return run_forward(batch, nullptr); }

  // Mean cross-entropy without touching gradients.
  double loss(const Tensor& batch, const std::vector<int>& labels) const {
    if (!ends_with_softmax_) throw ShapeMismatch("loss requires a softmax head");
    const std::size_t n = batch.shape.at(0);
    if (labels.size() != n) throw ShapeMismatch("labels must match batch size");
    Tensor probs = forward(batch);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double p = probs.values[i * output_dim_ + static_cast<std::size_t>(labels[i])];
      total -= std::log(p);
    }
    const double mean = total / static_cast<double>(n);
    if (!std::isfinite(mean)) throw NonFiniteLoss("loss is not finite");
    return mean;
  }

  // Mean cross-entropy loss and parameter gradients for a labeled batch.
  // Requires a softmax head.
  double loss_and_gradients(const Tensor& batch, const std::vector<int>& labels) {
    if (!ends_with_softmax_) throw ShapeMismatch("training requires a softmax head");
    const std::size_t n = batch.shape.at(0);
    if (labels.size() != n) throw ShapeMismatch("labels must match batch size");

    std::vector<Tensor> inputs;  // cached layer inputs
    Tensor probs = run_forward(batch, &inputs);

    double loss = 0.0;
    Tensor grad = Tensor::zeros(probs.shape);
    const std::size_t classes = output_dim_;
    for (std::size_t i = 0; i < n; ++i) {
      const int y = labels[i];
      if (y < 0 || static_cast<std::size_t>(y) >= classes) throw ShapeMismatch("label out of range");
      const double p = probs.values[i * classes + static_cast<std::size_t>(y)];
      loss -= std::log(p);
      for (std::size_t cidx = 0; cidx < classes; ++cidx) {
        double& g = grad.values[i * classes + cidx];
        g = probs.values[i * classes + cidx];
        if (cidx == static_cast<std::size_t>(y)) g -= 1.0;
        g /= static_cast<double>(n);
      }
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss)) throw NonFiniteLoss("loss is not finite");

    zero_grads();
    // the softmax+cross-entropy gradient above is w.r.t. the logits, so the
    // backward walk starts below the softmax layer
    Tensor delta = std::move(grad);
    for (std::size_t li = layers_.size(); li > 0; --li) {
      auto& l = layers_[li - 1];
      if (auto* a = std::get_if<detail::ActLayer>(&l)) {
        if (a->fn == Activation::Softmax) continue;  // folded into the loss gradient
        delta = act_backward(*a, inputs[li - 1], delta);
      } else if (auto* c = std::get_if<detail::ConvLayer>(&l)) {
        delta = conv_backward(*c, inputs[li - 1], delta);
      } else if (auto* p = std::get_if<detail::PoolLayer>(&l)) {
        delta = pool_backward(*p, inputs[li - 1], delta);
      } else if (auto* d = std::get_if<detail::DenseLayer>(&l)) {
        delta = dense_backward(*d, inputs[li - 1], delta);
      }
    }
    return loss;
  }

  std::vector<double> flat_gradients() const {
    std::vector<double> out;
    out.reserve(param_count());
    for (const auto& l : layers_) {
      if (const auto* c = std::get_if<detail::ConvLayer>(&l)) {
        out.insert(out.end(), c->gw.begin(), c->gw.end());
        out.insert(out.end(), c->gb.begin(), c->gb.end());
      } else if (const auto* d = std::get_if<detail::DenseLayer>(&l)) {
        out.insert(out.end(), d->gw.begin(), d->gw.end());
        out.insert(out.end(), d->gb.begin(), d->gb.end());
      }
    }
    return out;
  }

  void sgd_step(double lr, double l2) {
    for (auto& l : layers_) {
      if (auto* c = std::get_if<detail::ConvLayer>(&l)) {
        for (std::size_t i = 0; i < c->w.size(); ++i) c->w[i] -= lr * (c->gw[i] + l2 * c->w[i]);
        for (std::size_t i = 0; i < c->b.size(); ++i) c->b[i] -= lr * c->gb[i];
      } else if (auto* d = std::get_if<detail::DenseLayer>(&l)) {
        for (std::size_t i = 0; i < d->w.size(); ++i) d->w[i] -= lr * (d->gw[i] + l2 * d->w[i]);
        for (std::size_t i = 0; i < d->b.size(); ++i) d->b[i] -= lr * d->gb[i];
      }
    }
  }

  void save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot write " + path);
    f << "ABLNET1\n";
    nlohmann::json manifest;
    manifest["input"] = spec_.input_shape;
    manifest["seed"] = spec_.seed;
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& ls : spec_.layers) {
      nlohmann::json j;
      if (const auto* c = std::get_if<Conv2D>(&ls)) {
        j = {{"type", "conv2d"}, {"filters", c->filters}, {"kernel", c->kernel}, {"stride", c->stride}};
      } else if (const auto* p = std::get_if<MaxPool>(&ls)) {
        j = {{"type", "maxpool"}, {"size", p->size}};
      } else if (const auto* d = std::get_if<Dense>(&ls)) {
        j = {{"type", "dense"}, {"units", d->units}};
      } else {
        const char* names[] = {"relu", "sigmoid", "softmax"};
        j = {{"type", "activation"}, {"fn", names[static_cast<int>(std::get<Activation>(ls))]}};
      }
      layers.push_back(j);
    }
    manifest["layers"] = layers;
    const std::string text = manifest.dump();
    write_u64(f, text.size());
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (double v : flat_params()) write_f64(f, v);
    if (!f) throw FormatError("short write to " + path);
  }

  static Network load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw FormatError("cannot open " + path);
    std::string magic(8, '\0');
    f.read(magic.data(), 8);
    if (!f || magic != "ABLNET1\n") throw FormatError("bad network magic in " + path);
    const std::uint64_t len = read_u64(f);
    std::string text(len, '\0');
    f.read(text.data(), static_cast<std::streamsize>(len));
    if (!f) throw FormatError("truncated manifest in " + path);
    nlohmann::json manifest = nlohmann::json::parse(text, nullptr, false);
    if (manifest.is_discarded()) throw FormatError("bad manifest JSON in " + path);

    NetworkSpec spec;
    spec.input_shape = manifest.at("input").get<std::vector<std::size_t>>();
    spec.seed = manifest.at("seed").get<std::uint64_t>();
    for (const auto& j : manifest.at("layers")) {
      const std::string type = j.at("type").get<std::string>();
      if (type == "conv2d") {
        spec.layers.push_back(Conv2D{j.at("filters").get<std::size_t>(), j.at("kernel").get<std::size_t>(),
                                     j.at("stride").get<std::size_t>()});
      } else if (type == "maxpool") {
        spec.layers.push_back(MaxPool{j.at("size").get<std::size_t>()});
      } else if (type == "dense") {
        spec.layers.push_back(Dense{j.at("units").get<std::size_t>()});
      } else if (type == "activation") {
        const std::string fn = j.at("fn").get<std::string>();
        Activation a = fn == "relu" ? Activation::Relu
                       : fn == "sigmoid" ? Activation::Sigmoid
                                         : Activation::Softmax;
        spec.layers.push_back(a);
      } else {
        throw VersionError("unknown layer type " + type);
      }
    }
    Network net(spec);
    std::vector<double> params(net.param_count());
    for (auto& v : params) v = read_f64(f);
    net.set_flat_params(params);
    return net;
  }

 private:
  void zero_grads() {
    for (auto& l : layers_) {
      if (auto* c = std::get_if<detail::ConvLayer>(&l)) {
        c->gw.assign(c->w.size(), 0.0);
        c->gb.assign(c->b.size(), 0.0);
      } else if (auto* d = std::get_if<detail::DenseLayer>(&l)) {
        d->gw.assign(d->w.size(), 0.0);
        d->gb.assign(d->b.size(), 0.0);
      }
    }
  }

  Tensor run_forward(const Tensor& batch, std::vector<Tensor>* inputs) const {
    if (batch.shape.empty()) throw ShapeMismatch("batch must have a leading dimension");
    std::vector<std::size_t> expect = spec_.input_shape;
    std::vector<std::size_t> got(batch.shape.begin() + 1, batch.shape.end());
    if (Tensor::element_count(got) != Tensor::element_count(expect))
      throw ShapeMismatch("batch item shape does not match network input");
    const std::size_t n = batch.shape[0];

    Tensor cur = batch;
    for (const auto& l : layers_) {
      if (inputs) inputs->push_back(cur);
      if (const auto* c = std::get_if<detail::ConvLayer>(&l)) {
        cur = conv_forward(*c, cur, n);
      } else if (const auto* p = std::get_if<detail::PoolLayer>(&l)) {
        cur = pool_forward(*p, cur, n);
      } else if (const auto* d = std::get_if<detail::DenseLayer>(&l)) {
        cur = dense_forward(*d, cur, n);
      } else {
        cur = act_forward(std::get<detail::ActLayer>(l), cur, n);
      }
    }
    return cur;
  }

  static Tensor conv_forward(const detail::ConvLayer& l, const Tensor& in, std::size_t n) {
    Tensor out = Tensor::zeros({n, l.out_c, l.out_h, l.out_w});
    const std::size_t in_im = l.in_c * l.in_h * l.in_w;
    for (std::size_t b = 0; b < n; ++b) {
      const double* src = in.values.data() + b * in_im;
      double* dst = out.values.data() + b * l.out_c * l.out_h * l.out_w;
      for (std::size_t oc = 0; oc < l.out_c; ++oc) {
        for (std::size_t oy = 0; oy < l.out_h; ++oy) {
          for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            double acc = l.b[oc];
            for (std::size_t ic = 0; ic < l.in_c; ++ic) {
              for (std::size_t ky = 0; ky < l.k; ++ky) {
                const double* row = src + ic * l.in_h * l.in_w + (oy * l.stride + ky) * l.in_w +
                                    ox * l.stride;
                const double* wrow = l.w.data() + ((oc * l.in_c + ic) * l.k + ky) * l.k;
                for (std::size_t kx = 0; kx < l.k; ++kx) acc += row[kx] * wrow[kx];
              }
            }
            dst[(oc * l.out_h + oy) * l.out_w + ox] = acc;
          }
        }
      }
    }
    return out;
  }

  static Tensor conv_backward(detail::ConvLayer& l, const Tensor& in, const Tensor& dout) {
    const std::size_t n = in.shape[0];
    Tensor din = Tensor::zeros(in.shape);
    const std::size_t in_im = l.in_c * l.in_h * l.in_w;
    const std::size_t out_im = l.out_c * l.out_h * l.out_w;
    for (std::size_t b = 0; b < n; ++b) {
      const double* src = in.values.data() + b * in_im;
      const double* gout = dout.values.data() + b * out_im;
      double* gin = din.values.data() + b * in_im;
      for (std::size_t oc = 0; oc < l.out_c; ++oc) {
        for (std::size_t oy = 0; oy < l.out_h; ++oy) {
          for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            const double g = gout[(oc * l.out_h + oy) * l.out_w + ox];
            l.gb[oc] += g;
            for (std::size_t ic = 0; ic < l.in_c; ++ic) {
              for (std::size_t ky = 0; ky < l.k; ++ky) {
                const std::size_t iy = oy * l.stride + ky;
                const double* row = src + ic * l.in_h * l.in_w + iy * l.in_w + ox * l.stride;
                double* grow = gin + ic * l.in_h * l.in_w + iy * l.in_w + ox * l.stride;
                double* gw = l.gw.data() + ((oc * l.in_c + ic) * l.k + ky) * l.k;
                const double* w = l.w.data() + ((oc * l.in_c + ic) * l.k + ky) * l.k;
                for (std::size_t kx = 0; kx < l.k; ++kx) {
                  gw[kx] += g * row[kx];
                  grow[kx] += g * w[kx];
                }
              }
            }
          }
        }
      }
    }
    return din;
  }

  static Tensor pool_forward(const detail::PoolLayer& l, const Tensor& in, std::size_t n) {
    Tensor out = Tensor::zeros({n, l.c, l.out_h, l.out_w});
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < l.c; ++c) {
        const double* src = in.values.data() + (b * l.c + c) * l.in_h * l.in_w;
        double* dst = out.values.data() + (b * l.c + c) * l.out_h * l.out_w;
        for (std::size_t oy = 0; oy < l.out_h; ++oy) {
          for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            double best = src[(oy * l.size) * l.in_w + ox * l.size];
            for (std::size_t ky = 0; ky < l.size; ++ky)
              for (std::size_t kx = 0; kx < l.size; ++kx)
                best = std::max(best, src[(oy * l.size + ky) * l.in_w + ox * l.size + kx]);
            dst[oy * l.out_w + ox] = best;
          }
        }
      }
    }
    return out;
  }

  static Tensor pool_backward(const detail::PoolLayer& l, const Tensor& in, const Tensor& dout) {
    const std::size_t n = in.shape[0];
    Tensor din = Tensor::zeros(in.shape);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < l.c; ++c) {
        const double* src = in.values.data() + (b * l.c + c) * l.in_h * l.in_w;
        double* gin = din.values.data() + (b * l.c + c) * l.in_h * l.in_w;
        const double* gout = dout.values.data() + (b * l.c + c) * l.out_h * l.out_w;
        for (std::size_t oy = 0; oy < l.out_h; ++oy) {
          for (std::size_t ox = 0; ox < l.out_w; ++ox) {
            // gradient flows to the first maximal element
            std::size_t by = 0, bx = 0;
            double best = src[(oy * l.size) * l.in_w + ox * l.size];
            for (std::size_t ky = 0; ky < l.size; ++ky)
              for (std::size_t kx = 0; kx < l.size; ++kx) {
                const double v = src[(oy * l.size + ky) * l.in_w + ox * l.size + kx];
                if (v > best) {
                  best = v;
                  by = ky;
                  bx = kx;
                }
              }
            gin[(oy * l.size + by) * l.in_w + ox * l.size + bx] += gout[oy * l.out_w + ox];
          }
        }
      }
    }
    return din;
  }

  static Tensor dense_forward(const detail::DenseLayer& l, const Tensor& in, std::size_t n) {
    if (in.size() != n * l.in_dim) throw ShapeMismatch("dense input width mismatch");
    Tensor out = Tensor::zeros({n, l.out_dim});
    for (std::size_t b = 0; b < n; ++b) {
      const double* src = in.values.data() + b * l.in_dim;
      double* dst = out.values.data() + b * l.out_dim;
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        double acc = l.b[o];
        const double* w = l.w.data() + o * l.in_dim;
        for (std::size_t i = 0; i < l.in_dim; ++i) acc += w[i] * src[i];
        dst[o] = acc;
      }
    }
    return out;
  }

  static Tensor dense_backward(detail::DenseLayer& l, const Tensor& in, const Tensor& dout) {
    const std::size_t n = in.shape[0];
    Tensor din = Tensor::zeros(in.shape);
    for (std::size_t b = 0; b < n; ++b) {
      const double* src = in.values.data() + b * l.in_dim;
      double* gin = din.values.data() + b * l.in_dim;
      const double* g = dout.values.data() + b * l.out_dim;
      for (std::size_t o = 0; o < l.out_dim; ++o) {
        l.gb[o] += g[o];
        double* gw = l.gw.data() + o * l.in_dim;
        const double* w = l.w.data() + o * l.in_dim;
        for (std::size_t i = 0; i < l.in_dim; ++i) {
          gw[i] += g[o] * src[i];
          gin[i] += g[o] * w[i];
        }
      }
    }
    return din;
  }

  static Tensor act_forward(const detail::ActLayer& l, const Tensor& in, std::size_t n) {
    Tensor out = in;
    if (l.fn == Activation::Relu) {
      for (auto& v : out.values) v = v > 0 ? v : 0.0;
    } else if (l.fn == Activation::Sigmoid) {
      for (auto& v : out.values) v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const std::size_t w = in.size() / n;
      for (std::size_t b = 0; b < n; ++b) {
        double* row = out.values.data() + b * w;
        double mx = row[0];
        for (std::size_t i = 1; i < w; ++i) mx = std::max(mx, row[i]);
        double sum = 0.0;
        for (std::size_t i = 0; i < w; ++i) {
          row[i] = std::exp(row[i] - mx);
          sum += row[i];
        }
        for (std::size_t i = 0; i < w; ++i) row[i] /= sum;
      }
    }
    return out;
  }

  static Tensor act_backward(const detail::ActLayer& l, const Tensor& in, const Tensor& dout) {
    Tensor din = dout;
    if (l.fn == Activation::Relu) {
      for (std::size_t i = 0; i < din.size(); ++i)
        if (in.values[i] <= 0) din.values[i] = 0.0;
    } else if (l.fn == Activation::Sigmoid) {
      for (std::size_t i = 0; i < din.size(); ++i) {
        const double s = 1.0 / (1.0 + std::exp(-in.values[i]));
        din.values[i] *= s * (1.0 - s);
      }
    } else {
      throw ShapeMismatch("softmax is only supported as the final layer");
    }
    return din;
  }

  NetworkSpec spec_;
  std::vector<detail::Layer> layers_;
  std::size_t output_dim_ = 0;
  bool ends_with_softmax_ = false;
};

inline Network init_network(const NetworkSpec& spec) { return Network(spec); }

// ---------------------------------------------------------------------------
// Training

struct TrainTrace {
  std::vector<double> epoch_loss;
};

// SGD over shuffled minibatches; mutates net in place and reports the mean
// per-epoch loss.
inline TrainTrace train_supervised(Network& net, const Tensor& inputs, const std::vector<int>& labels,
                                   const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = inputs.shape.at(0);
  if (n == 0 || labels.size() != n) throw ShapeMismatch("need at least one labeled example");
  const std::size_t item = inputs.size() / n;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainTrace trace;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double total = 0.0;
    std::size_t pos = 0;
    while (pos < n) {
      const std::size_t m = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), n - pos);
      std::vector<std::size_t> bshape = inputs.shape;
      bshape[0] = m;
      Tensor batch = Tensor::zeros(bshape);
      std::vector<int> ys(m);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t src = order[pos + i];
        std::copy_n(inputs.values.begin() + static_cast<long>(src * item), item,
                    batch.values.begin() + static_cast<long>(i * item));
        ys[i] = labels[src];
      }
      const double loss = net.loss_and_gradients(batch, ys);
      net.sgd_step(cfg.learning_rate, cfg.l2);
      total += loss * static_cast<double>(m);
      pos += m;
    }
    trace.epoch_loss.push_back(total / static_cast<double>(n));
  }
  return trace;
}

// Central finite differences on every parameter; returns the maximum
// relative error against the analytic gradient.
inline double gradient_check(Network net, const Tensor& input, int label, double step = 1e-5) {
  const std::size_t n = input.shape.at(0);
  std::vector<int> labels(n, label);
  net.loss_and_gradients(input, labels);
  const std::vector<double> analytic = net.flat_gradients();
  std::vector<double> params = net.flat_params();

  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + step;
    net.set_flat_params(params);
    const double up = net.loss(input, labels);
    params[i] = keep - step;
    net.set_flat_params(params);
    const double down = net.loss(input, labels);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({1.0, std::abs(numeric), std::abs(analytic[i])});
    worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
  }
  return worst;
}

}  // namespace abl::nn
