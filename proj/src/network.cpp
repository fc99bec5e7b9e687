#include "hvs/network.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

namespace hvs {

bool operator==(const LayerSpec& a, const LayerSpec& b) {
  if (a.kind != b.kind || a.out_channels != b.out_channels || a.relu != b.relu) return false;
  return a.kind == LayerKind::Dense || (a.kernel == b.kernel && a.stride == b.stride);
}

bool operator==(const Architecture& a, const Architecture& b) {
  return a.input_channels == b.input_channels && a.input_height == b.input_height &&
         a.input_width == b.input_width && a.input_offset == b.input_offset && a.layers == b.layers;
}

Architecture Architecture::servo_policy(int input_size) {
  Architecture arch;
  arch.input_channels = 1;
  arch.input_height = input_size;
  arch.input_width = input_size;
  arch.input_offset = 0.5;
  arch.layers = {
      {LayerKind::Conv, 8, 5, 2, true},
      {LayerKind::Conv, 16, 3, 2, true},
      {LayerKind::Conv, 32, 3, 2, true},
      {LayerKind::Dense, 64, 1, 1, true},
      {LayerKind::Dense, 2, 1, 1, false},
  };
  arch.validate();
  return arch;
}

std::vector<TensorShape> Architecture::shapes() const {
  std::vector<TensorShape> out;
  TensorShape cur{input_channels, input_height, input_width};
  out.push_back(cur);
  for (const auto& layer : layers) {
    if (layer.kind == LayerKind::Conv) {
      if (layer.kernel < 1 || layer.stride < 1 || cur.height < layer.kernel || cur.width < layer.kernel) {
        throw std::invalid_argument("Architecture: convolution does not fit its input");
      }
      cur = {layer.out_channels, (cur.height - layer.kernel) / layer.stride + 1,
             (cur.width - layer.kernel) / layer.stride + 1};
    } else {
      cur = {layer.out_channels, 1, 1};
    }
    out.push_back(cur);
  }
  return out;
}

void Architecture::validate() const {
  if (input_channels < 1 || input_height < 1 || input_width < 1) {
    throw std::invalid_argument("Architecture: bad input shape");
  }
  if (layers.empty()) throw std::invalid_argument("Architecture: no layers");
  bool seen_dense = false;
  for (const auto& layer : layers) {
    if (layer.out_channels < 1) throw std::invalid_argument("Architecture: layer width must be positive");
    if (layer.kind == LayerKind::Conv && seen_dense) {
      throw std::invalid_argument("Architecture: convolution after a dense layer");
    }
    seen_dense = seen_dense || layer.kind == LayerKind::Dense;
  }
  (void)shapes();
}

std::size_t Architecture::output_size() const { return shapes().back().size(); }

std::string Architecture::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "input " << input_channels << "x" << input_height << "x" << input_width << " offset=" << input_offset << "\n";
  for (const auto& layer : layers) {
    if (layer.kind == LayerKind::Conv) {
      os << "conv k=" << layer.kernel << " s=" << layer.stride << " out=" << layer.out_channels;
    } else {
      os << "dense out=" << layer.out_channels;
    }
    os << (layer.relu ? " relu" : " linear") << "\n";
  }
  return os.str();
}

Architecture Architecture::parse(const std::string& text) {
  Architecture arch;
  arch.layers.clear();
  std::istringstream in(text);
  std::string line;
  bool have_input = false;
  auto field = [](const std::string& token, const std::string& key) -> std::string {
    if (token.rfind(key + "=", 0) != 0) throw std::invalid_argument("Architecture::parse: expected " + key);
    return token.substr(key.size() + 1);
  };
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind) || kind.front() == '#' || kind == "meta") continue;
    if (kind == "input") {
      std::string dims, offset;
      ls >> dims >> offset;
      char x1 = 0, x2 = 0;
      std::istringstream ds(dims);
      if (!(ds >> arch.input_channels >> x1 >> arch.input_height >> x2 >> arch.input_width) || x1 != 'x' || x2 != 'x') {
        throw std::invalid_argument("Architecture::parse: bad input line");
      }
      arch.input_offset = std::stod(field(offset, "offset"));
      have_input = true;
    } else if (kind == "conv" || kind == "dense") {
      LayerSpec layer;
      std::string tok;
      if (kind == "conv") {
        layer.kind = LayerKind::Conv;
        ls >> tok;
        layer.kernel = std::stoi(field(tok, "k"));
        ls >> tok;
        layer.stride = std::stoi(field(tok, "s"));
      }
      ls >> tok;
      layer.out_channels = std::stoi(field(tok, "out"));
      ls >> tok;
      if (tok != "relu" && tok != "linear") throw std::invalid_argument("Architecture::parse: bad activation");
      layer.relu = tok == "relu";
      arch.layers.push_back(layer);
    } else {
      throw std::invalid_argument("Architecture::parse: unknown line '" + line + "'");
    }
  }
  if (!have_input) throw std::invalid_argument("Architecture::parse: missing input line");
  arch.validate();
  return arch;
}

namespace {

std::size_t fan_in(const LayerSpec& layer, const TensorShape& in) {
  return layer.kind == LayerKind::Conv ? static_cast<std::size_t>(in.channels) * layer.kernel * layer.kernel
                                       : in.size();
}

std::vector<std::size_t> weight_shape(const LayerSpec& layer, const TensorShape& in) {
  if (layer.kind == LayerKind::Conv) {
    return {static_cast<std::size_t>(layer.out_channels), static_cast<std::size_t>(in.channels),
            static_cast<std::size_t>(layer.kernel), static_cast<std::size_t>(layer.kernel)};
  }
  return {static_cast<std::size_t>(layer.out_channels), in.size()};
}

std::size_t product(const std::vector<std::size_t>& dims) {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

}  // namespace

PolicyModel PolicyModel::zeros(const Architecture& arch) {
  arch.validate();
  PolicyModel model;
  model.arch = arch;
  const auto shapes = arch.shapes();
  int conv_index = 0;
  int dense_index = 0;
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto& layer = arch.layers[i];
    const std::string prefix = layer.kind == LayerKind::Conv ? "conv" + std::to_string(++conv_index)
                                                             : "dense" + std::to_string(++dense_index);
    const auto wshape = weight_shape(layer, shapes[i]);
    model.params.push_back({prefix + ".weight", wshape, std::vector<double>(product(wshape), 0.0)});
    model.params.push_back({prefix + ".bias", {static_cast<std::size_t>(layer.out_channels)},
                            std::vector<double>(layer.out_channels, 0.0)});
  }
  return model;
}

PolicyModel PolicyModel::initialize(const Architecture& arch, std::uint64_t seed) {
  PolicyModel model = zeros(arch);
  model.meta.seed = seed;
  std::mt19937_64 rng(seed);
  const auto shapes = arch.shapes();
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in(arch.layers[i], shapes[i])));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : model.params[2 * i].values) w = dist(rng);
  }
  return model;
}

void PolicyModel::validate() const {
  arch.validate();
  const auto shapes = arch.shapes();
  if (params.size() != 2 * arch.layers.size()) throw std::invalid_argument("PolicyModel: tensor count mismatch");
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    const auto wshape = weight_shape(arch.layers[i], shapes[i]);
    const Tensor& w = params[2 * i];
    const Tensor& b = params[2 * i + 1];
    if (w.shape != wshape || w.values.size() != product(wshape)) {
      throw std::invalid_argument("PolicyModel: weight shape mismatch in " + w.name);
    }
    if (b.shape != std::vector<std::size_t>{static_cast<std::size_t>(arch.layers[i].out_channels)} ||
        b.values.size() != b.shape[0]) {
      throw std::invalid_argument("PolicyModel: bias shape mismatch in " + b.name);
    }
    for (const auto* t : {&w, &b}) {
      for (double v : t->values) {
        if (!std::isfinite(v)) throw std::invalid_argument("PolicyModel: non-finite parameter in " + t->name);
      }
    }
  }
}

std::size_t PolicyModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : params) n += t.values.size();
  return n;
}

Gradients zero_gradients(const PolicyModel& model) {
  Gradients g;
  g.reserve(model.params.size());
  for (const auto& t : model.params) g.emplace_back(t.values.size(), 0.0);
  return g;
}

Workspace::Workspace(const Architecture& arch) : shapes(arch.shapes()) {
  for (const auto& s : shapes) {
    act.emplace_back(s.size(), 0.0);
    grad.emplace_back(s.size(), 0.0);
  }
}

namespace {

void conv_forward(const LayerSpec& layer, const TensorShape& in_shape, const TensorShape& out_shape,
                  const double* in, const double* w, const double* b, double* out) {
  const int k = layer.kernel;
  const int s = layer.stride;
  const int iw = in_shape.width;
  const int ow = out_shape.width;
  const int oh = out_shape.height;
  const std::size_t plane_in = static_cast<std::size_t>(in_shape.height) * iw;
  const std::size_t plane_out = static_cast<std::size_t>(oh) * ow;

  for (int o = 0; o < out_shape.channels; ++o) {
    double* dst = out + o * plane_out;
    for (std::size_t i = 0; i < plane_out; ++i) dst[i] = b[o];
    for (int c = 0; c < in_shape.channels; ++c) {
      const double* src = in + c * plane_in;
      const double* wk = w + (static_cast<std::size_t>(o) * in_shape.channels + c) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = wk[ky * k + kx];
          for (int oy = 0; oy < oh; ++oy) {
            const double* row = src + static_cast<std::size_t>(oy * s + ky) * iw + kx;
            double* drow = dst + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) drow[ox] += wv * row[ox * s];
          }
        }
      }
    }
  }
}

// Accumulates weight/bias gradients and (if `din` is non-null) the input gradient.
void conv_backward(const LayerSpec& layer, const TensorShape& in_shape, const TensorShape& out_shape,
                   const double* in, const double* w, const double* dout, double scale, double* dw, double* db,
                   double* din) {
  const int k = layer.kernel;
  const int s = layer.stride;
  const int iw = in_shape.width;
  const int ow = out_shape.width;
  const int oh = out_shape.height;
  const std::size_t plane_in = static_cast<std::size_t>(in_shape.height) * iw;
  const std::size_t plane_out = static_cast<std::size_t>(oh) * ow;

  for (int o = 0; o < out_shape.channels; ++o) {
    const double* g = dout + o * plane_out;
    double bsum = 0.0;
    for (std::size_t i = 0; i < plane_out; ++i) bsum += g[i];
    db[o] += scale * bsum;
    for (int c = 0; c < in_shape.channels; ++c) {
      const double* src = in + c * plane_in;
      double* dsrc = din ? din + c * plane_in : nullptr;
      const std::size_t wbase = (static_cast<std::size_t>(o) * in_shape.channels + c) * k * k;
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const double wv = w[wbase + ky * k + kx];
          double acc = 0.0;
          for (int oy = 0; oy < oh; ++oy) {
            const std::size_t roff = static_cast<std::size_t>(oy * s + ky) * iw + kx;
            const double* grow = g + static_cast<std::size_t>(oy) * ow;
            const double* row = src + roff;
            for (int ox = 0; ox < ow; ++ox) acc += grow[ox] * row[ox * s];
            if (dsrc) {
              double* drow = dsrc + roff;
              for (int ox = 0; ox < ow; ++ox) drow[ox * s] += wv * grow[ox];
            }
          }
          dw[wbase + ky * k + kx] += scale * acc;
        }
      }
    }
  }
}

void dense_forward(std::size_t n_in, std::size_t n_out, const double* in, const double* w, const double* b,
                   double* out) {
  for (std::size_t j = 0; j < n_out; ++j) {
    const double* wr = w + j * n_in;
    double acc = b[j];
    for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * in[i];
    out[j] = acc;
  }
}

void dense_backward(std::size_t n_in, std::size_t n_out, const double* in, const double* w, const double* dout,
                    double scale, double* dw, double* db, double* din) {
  for (std::size_t j = 0; j < n_out; ++j) {
    const double g = dout[j];
    db[j] += scale * g;
    if (g == 0.0) continue;
    double* dwr = dw + j * n_in;
    const double sg = scale * g;
    for (std::size_t i = 0; i < n_in; ++i) dwr[i] += sg * in[i];
    if (din) {
      const double* wr = w + j * n_in;
      for (std::size_t i = 0; i < n_in; ++i) din[i] += wr[i] * g;
    }
  }
}

}  // namespace

std::span<const double> forward(const PolicyModel& model, std::span<const double> input, Workspace& ws) {
  const Architecture& arch = model.arch;
  if (input.size() != ws.shapes[0].size()) throw std::invalid_argument("forward: input size mismatch");
  auto& x0 = ws.act[0];
  for (std::size_t i = 0; i < input.size(); ++i) x0[i] = input[i] - arch.input_offset;

  for (std::size_t l = 0; l < arch.layers.size(); ++l) {
    const LayerSpec& layer = arch.layers[l];
    const double* w = model.params[2 * l].values.data();
    const double* b = model.params[2 * l + 1].values.data();
    const double* in = ws.act[l].data();
    double* out = ws.act[l + 1].data();
    if (layer.kind == LayerKind::Conv) {
      conv_forward(layer, ws.shapes[l], ws.shapes[l + 1], in, w, b, out);
    } else {
      dense_forward(ws.shapes[l].size(), ws.shapes[l + 1].size(), in, w, b, out);
    }
    if (layer.relu) {
      for (double& v : ws.act[l + 1]) v = v > 0.0 ? v : 0.0;
    }
  }
  return ws.act.back();
}

std::vector<double> network_input(const Architecture& arch, const Image& img) {
  if (img.channels != arch.input_channels || img.height != arch.input_height || img.width != arch.input_width) {
    throw std::invalid_argument("forward: image shape does not match the network input");
  }
  if (arch.input_channels == 1) return img.data;
  // Interleaved pixels to planar channels.
  std::vector<double> planar(img.data.size());
  const std::size_t n = img.pixel_count();
  for (std::size_t p = 0; p < n; ++p) {
    for (int c = 0; c < img.channels; ++c) planar[c * n + p] = img.data[p * img.channels + c];
  }
  return planar;
}

std::vector<double> forward(const PolicyModel& model, const Image& img) {
  Workspace ws(model.arch);
  const auto input = network_input(model.arch, img);
  const auto out = forward(model, input, ws);
  return {out.begin(), out.end()};
}

std::array<double, 2> forward2(const PolicyModel& model, const Image& img) {
  const auto out = forward(model, img);
  if (out.size() != 2) throw std::invalid_argument("forward2: network does not have two outputs");
  return {out[0], out[1]};
}

double sample_loss(std::span<const double> output, std::span<const double> label) {
  if (output.size() != label.size()) throw std::invalid_argument("sample_loss: label size mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < output.size(); ++i) {
    const double d = output[i] - label[i];
    acc += d * d;
  }
  return acc / static_cast<double>(output.size());
}

double evaluate_loss(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                     Workspace& ws) {
  return sample_loss(forward(model, input, ws), label);
}

double accumulate_gradient(const PolicyModel& model, std::span<const double> input, std::span<const double> label,
                           double scale, Gradients& grads, Workspace& ws) {
  const auto out = forward(model, input, ws);
  const double loss = sample_loss(out, label);
  const Architecture& arch = model.arch;
  const std::size_t n_layers = arch.layers.size();

  auto& g_out = ws.grad[n_layers];
  for (std::size_t i = 0; i < out.size(); ++i) g_out[i] = 2.0 * (out[i] - label[i]) / static_cast<double>(out.size());

  for (std::size_t l = n_layers; l-- > 0;) {
    const LayerSpec& layer = arch.layers[l];
    auto& g = ws.grad[l + 1];
    if (layer.relu) {
      const auto& a = ws.act[l + 1];
      for (std::size_t i = 0; i < g.size(); ++i) {
        if (a[i] <= 0.0) g[i] = 0.0;
      }
    }
    double* din = nullptr;
    if (l > 0) {
      std::fill(ws.grad[l].begin(), ws.grad[l].end(), 0.0);
      din = ws.grad[l].data();
    }
    const double* w = model.params[2 * l].values.data();
    double* dw = grads[2 * l].data();
    double* db = grads[2 * l + 1].data();
    if (layer.kind == LayerKind::Conv) {
      conv_backward(layer, ws.shapes[l], ws.shapes[l + 1], ws.act[l].data(), w, g.data(), scale, dw, db, din);
    } else {
      dense_backward(ws.shapes[l].size(), ws.shapes[l + 1].size(), ws.act[l].data(), w, g.data(), scale, dw, db,
                     din);
    }
  }
  return loss;
}

}  // namespace hvs
