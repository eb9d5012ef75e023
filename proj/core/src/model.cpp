#include "memaudit/model.hpp"

#include <cmath>

#include "memaudit/error.hpp"
#include "memaudit/rng.hpp"

namespace memaudit {

std::string to_string(Conditioning c) {
  return c == Conditioning::Unconditional ? "unconditional" : "class-conditional";
}

Conditioning conditioning_from_string(const std::string& s) {
  if (s == "unconditional") return Conditioning::Unconditional;
  if (s == "class-conditional") return Conditioning::ClassConditional;
  throw_error(ErrorCategory::Config, "unknown conditioning mode: " + s);
}

void ArchConfig::validate() const {
  if (h < 1 || w < 1 || c < 1)
    throw_error(ErrorCategory::Config, "arch: input shape must be positive");
  if (hidden.empty())
    throw_error(ErrorCategory::Config, "arch: need at least one hidden layer");
  for (int n : hidden)
    if (n < 1) throw_error(ErrorCategory::Config, "arch: hidden size must be >= 1");
  if (time_embed_dim < 2 || time_embed_dim % 2 != 0)
    throw_error(ErrorCategory::Config, "arch: time_embed_dim must be even and >= 2");
  if (conditioning == Conditioning::ClassConditional && num_classes < 1)
    throw_error(ErrorCategory::Config, "arch: class-conditional needs num_classes >= 1");
}

std::vector<double> time_embedding(int t, int dim) {
  std::vector<double> emb(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::exp(-std::log(10000.0) * i / half);
    emb[2 * i] = std::sin(t * freq);
    emb[2 * i + 1] = std::cos(t * freq);
  }
  return emb;
}

DenoiserModel::DenoiserModel(ArchConfig arch) : arch_(std::move(arch)) {
  arch_.validate();
  build_layout();
  theta_.assign(total_params_, 0.0);
}

void DenoiserModel::build_layout() {
  const int d = arch_.input_dim();
  std::size_t off = 0;
  if (arch_.conditioning == Conditioning::ClassConditional) {
    class_embed_off_ = off;
    off += static_cast<std::size_t>(arch_.num_classes) * arch_.time_embed_dim;
  }
  std::vector<int> dims;
  dims.push_back(d + arch_.time_embed_dim);
  for (int n : arch_.hidden) dims.push_back(n);
  dims.push_back(d);
  layers_.clear();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    layer.in = dims[l];
    layer.out = dims[l + 1];
    layer.w_off = off;
    off += static_cast<std::size_t>(layer.out) * layer.in;
    layer.b_off = off;
    off += layer.out;
    layers_.push_back(layer);
  }
  total_params_ = off;
}

DenoiserModel DenoiserModel::random_init(const ArchConfig& arch,
                                         std::uint64_t seed) {
  DenoiserModel m(arch);
  Rng rng(seed);
  if (arch.conditioning == Conditioning::ClassConditional) {
    const std::size_t n =
        static_cast<std::size_t>(arch.num_classes) * arch.time_embed_dim;
    for (std::size_t i = 0; i < n; ++i)
      m.theta_[m.class_embed_off_ + i] = 0.01 * rng.gaussian();
  }
  for (const Layer& l : m.layers_) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(l.in));
    for (std::size_t i = 0; i < static_cast<std::size_t>(l.out) * l.in; ++i)
      m.theta_[l.w_off + i] = scale * rng.gaussian();
    // biases start at 0
  }
  return m;
}

std::vector<double> DenoiserModel::make_input(const std::vector<double>& z,
                                              int t,
                                              std::optional<int> label) const {
  const int d = arch_.input_dim();
  if (z.size() != static_cast<std::size_t>(d))
    throw_error(ErrorCategory::Argument, "model input has wrong dimension");
  std::vector<double> in(d + arch_.time_embed_dim);
  for (int i = 0; i < d; ++i) in[i] = z[i];
  std::vector<double> temb = time_embedding(t, arch_.time_embed_dim);
  if (arch_.conditioning == Conditioning::ClassConditional && label.has_value()) {
    if (*label < 0 || *label >= arch_.num_classes)
      throw_error(ErrorCategory::Argument, "class label out of range");
    const double* ce =
        theta_.data() + class_embed_off_ +
        static_cast<std::size_t>(*label) * arch_.time_embed_dim;
    for (int i = 0; i < arch_.time_embed_dim; ++i) temb[i] += ce[i];
  }
  for (int i = 0; i < arch_.time_embed_dim; ++i) in[d + i] = temb[i];
  return in;
}

std::vector<double> DenoiserModel::predict_noise(const std::vector<double>& z,
                                                 const NoiseSchedule& s, int t,
                                                 std::optional<int> label) const {
  if (t < 0 || t > s.T)
    throw_error(ErrorCategory::Argument, "predict: t out of [0, T]");
  std::vector<double> cur = make_input(z, t, label);
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::vector<double> next(layer.out);
    const double* W = theta_.data() + layer.w_off;
    const double* b = theta_.data() + layer.b_off;
    for (int o = 0; o < layer.out; ++o) {
      double acc = b[o];
      const double* row = W + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[i];
      next[o] = acc;
    }
    if (l + 1 < layers_.size())
      for (double& v : next) v = std::tanh(v);
    cur = std::move(next);
  }
  const double sqrt_a = t == 0 ? 1.0 : std::sqrt(s.a[t]);
  const double inv = t == 0 ? 1.0 : 1.0 / std::sqrt(1.0 - s.a[t]);
  for (std::size_t i = 0; i < cur.size(); ++i)
    cur[i] = (z[i] - sqrt_a * cur[i]) * inv;
  return cur;
}

double DenoiserModel::loss_and_grad(const NoiseSchedule& s,
                                    const std::vector<double>& x_model, int t,
                                    const std::vector<double>& eps,
                                    std::optional<int> label,
                                    std::vector<double>* grad) const {
  if (t < 0 || t > s.T)
    throw_error(ErrorCategory::Argument, "loss: t out of [0, T]");
  if (x_model.size() != eps.size())
    throw_error(ErrorCategory::Argument, "loss: x and eps shape mismatch");
  const int d = arch_.input_dim();
  if (x_model.size() != static_cast<std::size_t>(d))
    throw_error(ErrorCategory::Argument, "loss: input shape mismatch with arch");

  const std::vector<double> noised = add_noise(x_model, t, eps, s);

  // Forward pass keeping pre- and post-activation values.
  std::vector<std::vector<double>> acts;  // acts[0] = input, then layer outputs
  acts.push_back(make_input(noised, t, label));
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const Layer& layer = layers_[l];
    std::vector<double> next(layer.out);
    const double* W = theta_.data() + layer.w_off;
    const double* b = theta_.data() + layer.b_off;
    const std::vector<double>& cur = acts.back();
    for (int o = 0; o < layer.out; ++o) {
      double acc = b[o];
      const double* row = W + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) acc += row[i] * cur[i];
      next[o] = acc;
    }
    if (l + 1 < layers_.size())
      for (double& v : next) v = std::tanh(v);
    acts.push_back(std::move(next));
  }

  // The network output is the x0 head; convert to the epsilon prediction.
  const std::vector<double>& head = acts.back();
  const double sqrt_a = t == 0 ? 1.0 : std::sqrt(s.a[t]);
  const double inv = t == 0 ? 1.0 : 1.0 / std::sqrt(1.0 - s.a[t]);
  std::vector<double> pred(d);
  for (int i = 0; i < d; ++i) pred[i] = (noised[i] - sqrt_a * head[i]) * inv;
  double loss = 0.0;
  for (int i = 0; i < d; ++i) {
    const double r = pred[i] - eps[i];
    loss += r * r;
  }
  loss /= d;

  if (grad == nullptr) return loss;

  grad->assign(total_params_, 0.0);
  std::vector<double> delta(d);
  for (int i = 0; i < d; ++i)
    delta[i] = 2.0 * (pred[i] - eps[i]) / d * (-sqrt_a * inv);

  for (std::size_t li = layers_.size(); li-- > 0;) {
    const Layer& layer = layers_[li];
    const std::vector<double>& in_act = acts[li];
    double* gW = grad->data() + layer.w_off;
    double* gb = grad->data() + layer.b_off;
    std::vector<double> delta_in(layer.in, 0.0);
    const double* W = theta_.data() + layer.w_off;
    for (int o = 0; o < layer.out; ++o) {
      const double dv = delta[o];
      gb[o] += dv;
      double* gRow = gW + static_cast<std::size_t>(o) * layer.in;
      const double* row = W + static_cast<std::size_t>(o) * layer.in;
      for (int i = 0; i < layer.in; ++i) {
        gRow[i] += dv * in_act[i];
        delta_in[i] += dv * row[i];
      }
    }
    if (li > 0) {
      // Input to this layer was tanh(pre-activation); acts[li] holds the
      // post-activation values, so dtanh = 1 - y^2.
      for (int i = 0; i < layer.in; ++i)
        delta_in[i] *= 1.0 - in_act[i] * in_act[i];
    } else if (arch_.conditioning == Conditioning::ClassConditional &&
               label.has_value()) {
      double* gce = grad->data() + class_embed_off_ +
                    static_cast<std::size_t>(*label) * arch_.time_embed_dim;
      for (int i = 0; i < arch_.time_embed_dim; ++i)
        gce[i] += delta_in[d + i];
    }
    delta = std::move(delta_in);
  }
  return loss;
}

double diffusion_loss(const DenoiserModel& m, const NoiseSchedule& s,
                      const Image& x, int t, const std::vector<double>& eps,
                      std::optional<int> label) {
  const ArchConfig& a = m.arch();
  if (x.h != a.h || x.w != a.w || x.c != a.c)
    throw_error(ErrorCategory::Argument, "diffusion_loss: image shape mismatch");
  return m.loss_and_grad(s, to_model_range(x), t, eps, label, nullptr);
}

}  // namespace memaudit
