#include "planlab/dense_net.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "planlab/rng.hpp"

namespace planlab {

DenseNet DenseNet::make(const std::vector<int>& layer_dims, uint64_t seed) {
  if (layer_dims.size() < 2) throw std::invalid_argument("net needs at least two layer dims");
  for (int d : layer_dims) {
    if (d <= 0) throw std::invalid_argument("layer dims must be positive");
  }
  DenseNet net;
  net.dims = layer_dims;
  Rng rng(seed);
  for (size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    const double bound = std::sqrt(6.0 / (fan_in + fan_out));
    Eigen::MatrixXd wl(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) wl(r, c) = rng.uniform(-bound, bound);
    }
    net.w.push_back(std::move(wl));
    net.b.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

long DenseNet::param_count() const {
  long n = 0;
  for (size_t l = 0; l < w.size(); ++l) n += w[l].size() + b[l].size();
  return n;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& input) const {
  return forward_trace(input, nullptr);
}

Eigen::VectorXd DenseNet::forward_trace(const Eigen::VectorXd& input,
                                        Eigen::VectorXd* preacts) const {
  if (input.size() != dims.front()) {
    throw std::invalid_argument("forward: input length " + std::to_string(input.size()) +
                                " != layer_dims[0] " + std::to_string(dims.front()));
  }
  long n_hidden = 0;
  for (size_t l = 1; l + 1 < dims.size(); ++l) n_hidden += dims[l];
  if (preacts) preacts->resize(n_hidden);

  Eigen::VectorXd h = input;
  long off = 0;
  for (size_t l = 0; l < w.size(); ++l) {
    Eigen::VectorXd z = w[l] * h + b[l];
    if (l + 1 < w.size()) {
      if (preacts) preacts->segment(off, z.size()) = z;
      off += z.size();
      h = z.cwiseMax(0.0);
    } else {
      h = std::move(z);
    }
  }
  return h;
}

NetGrads NetGrads::zeros_like(const DenseNet& net) {
  NetGrads g;
  for (size_t l = 0; l < net.w.size(); ++l) {
    g.w.push_back(Eigen::MatrixXd::Zero(net.w[l].rows(), net.w[l].cols()));
    g.b.push_back(Eigen::VectorXd::Zero(net.b[l].size()));
  }
  g.input = Eigen::VectorXd::Zero(net.dims.front());
  return g;
}

void NetGrads::add_scaled(const NetGrads& other, double scale) {
  for (size_t l = 0; l < w.size(); ++l) {
    w[l] += scale * other.w[l];
    b[l] += scale * other.b[l];
  }
  if (input.size() == other.input.size()) input += scale * other.input;
}

void NetGrads::scale(double s) {
  for (size_t l = 0; l < w.size(); ++l) {
    w[l] *= s;
    b[l] *= s;
  }
  input *= s;
}

double NetGrads::squared_norm() const {
  double n = input.squaredNorm();
  for (size_t l = 0; l < w.size(); ++l) n += w[l].squaredNorm() + b[l].squaredNorm();
  return n;
}

NetGrads backward(const DenseNet& net, const Eigen::VectorXd& input,
                  const Eigen::VectorXd& output_gradient) {
  if (output_gradient.size() != net.dims.back()) {
    throw std::invalid_argument("backward: output gradient length mismatch");
  }

  // Recompute forward, caching layer inputs and hidden pre-activations.
  std::vector<Eigen::VectorXd> acts;  // acts[l] is the input to layer l
  std::vector<Eigen::VectorXd> pre;   // pre[l] for hidden layers
  acts.push_back(input);
  if (input.size() != net.dims.front()) {
    throw std::invalid_argument("backward: input length mismatch");
  }
  for (size_t l = 0; l < net.w.size(); ++l) {
    Eigen::VectorXd z = net.w[l] * acts.back() + net.b[l];
    if (l + 1 < net.w.size()) {
      pre.push_back(z);
      acts.push_back(z.cwiseMax(0.0));
    } else {
      pre.push_back(std::move(z));
    }
  }

  NetGrads g = NetGrads::zeros_like(net);
  Eigen::VectorXd delta = output_gradient;
  for (int l = static_cast<int>(net.w.size()) - 1; l >= 0; --l) {
    g.w[l] = delta * acts[l].transpose();
    g.b[l] = delta;
    Eigen::VectorXd dprev = net.w[l].transpose() * delta;
    if (l > 0) {
      // Rectifier derivative: 1 for positive pre-activation, 0 otherwise.
      dprev = dprev.cwiseProduct(
          (pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    delta = std::move(dprev);
  }
  g.input = delta;
  return g;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void save_dense_net(const DenseNet& net, std::ostream& os) {
  os << "densenet " << net.dims.size();
  for (int d : net.dims) os << ' ' << d;
  os << '\n';
  for (size_t l = 0; l < net.w.size(); ++l) {
    for (int r = 0; r < net.w[l].rows(); ++r) {
      for (int c = 0; c < net.w[l].cols(); ++c) {
        os << format_double(net.w[l](r, c)) << '\n';
      }
    }
    for (int r = 0; r < net.b[l].size(); ++r) os << format_double(net.b[l][r]) << '\n';
  }
}

DenseNet load_dense_net(std::istream& is) {
  std::string tag;
  is >> tag;
  if (tag != "densenet") throw std::runtime_error("checkpoint: expected 'densenet' header");
  size_t k = 0;
  is >> k;
  if (!is || k < 2) throw std::runtime_error("checkpoint: bad layer count");
  std::vector<int> dims(k);
  for (auto& d : dims) {
    is >> d;
    if (!is || d <= 0) throw std::runtime_error("checkpoint: bad layer dim");
  }
  DenseNet net;
  net.dims = dims;
  for (size_t l = 0; l + 1 < dims.size(); ++l) {
    Eigen::MatrixXd wl(dims[l + 1], dims[l]);
    for (int r = 0; r < wl.rows(); ++r) {
      for (int c = 0; c < wl.cols(); ++c) {
        if (!(is >> wl(r, c))) throw std::runtime_error("checkpoint: truncated weights");
      }
    }
    Eigen::VectorXd bl(dims[l + 1]);
    for (int r = 0; r < bl.size(); ++r) {
      if (!(is >> bl[r])) throw std::runtime_error("checkpoint: truncated bias");
    }
    net.w.push_back(std::move(wl));
    net.b.push_back(std::move(bl));
  }
  return net;
}

void save_dense_net_file(const DenseNet& net, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for write: " + path);
  save_dense_net(net, os);
}

DenseNet load_dense_net_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for read: " + path);
  return load_dense_net(is);
}

}  // namespace planlab
