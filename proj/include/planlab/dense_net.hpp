#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace planlab {

// Fully connected network with rectified-linear hidden layers and a linear
// output layer. Double precision throughout; forward and backward are pure
// given the parameters.
struct DenseNet {
  std::vector<int> dims;               // layer sizes, input first
  std::vector<Eigen::MatrixXd> w;      // w[l] maps dims[l] -> dims[l+1]
  std::vector<Eigen::VectorXd> b;

  // Seeded uniform init in +-sqrt(6 / (fan_in + fan_out)) per layer.
  static DenseNet make(const std::vector<int>& layer_dims, uint64_t seed);

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  long param_count() const;

  Eigen::VectorXd forward(const Eigen::VectorXd& input) const;

  // Forward pass that also returns the pre-activation of every hidden layer,
  // concatenated in layer order. Used by the finite-difference harness to
  // detect rectifier-kink crossings.
  Eigen::VectorXd forward_trace(const Eigen::VectorXd& input, Eigen::VectorXd* preacts) const;
};

struct NetGrads {
  std::vector<Eigen::MatrixXd> w;
  std::vector<Eigen::VectorXd> b;
  Eigen::VectorXd input;

  static NetGrads zeros_like(const DenseNet& net);
  void add_scaled(const NetGrads& other, double scale);
  void scale(double s);
  double squared_norm() const;
};

// Gradients of a scalar loss with respect to all parameters and the input,
// given d loss / d output.
NetGrads backward(const DenseNet& net, const Eigen::VectorXd& input,
                  const Eigen::VectorXd& output_gradient);

// Checkpoint format (text): one header line "densenet <k> d0 ... d{k-1}",
// then all parameters whitespace-separated in layer order, each matrix
// row-major, weights before bias. Doubles are printed with 17 significant
// digits, which round-trips value-exactly.
void save_dense_net(const DenseNet& net, std::ostream& os);
DenseNet load_dense_net(std::istream& is);
void save_dense_net_file(const DenseNet& net, const std::string& path);
DenseNet load_dense_net_file(const std::string& path);

std::string format_double(double v);

}  // namespace planlab
