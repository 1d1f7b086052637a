#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace wsbert {

// Rows index tokens (or examples), columns index features.
using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

using Rng = std::mt19937_64;

enum class Mode { kTrain, kInference };

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  Parameter() = default;
  Parameter(std::string n, Eigen::Index rows, Eigen::Index cols);

  void ZeroGrad() { grad.setZero(); }
  double GradNorm() const { return grad.norm(); }
};

void InitNormal(Parameter& p, double stddev, Rng& rng);

// y = x W^T + b with W stored as (out, in).
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, Eigen::Index in, Eigen::Index out);

  void Init(double stddev, Rng& rng);
  Matrix Forward(const Matrix& x) const;
  // Accumulates parameter gradients (when trainable) and returns dL/dx.
  Matrix Backward(const Matrix& x, const Matrix& dy);

  Eigen::Index in_features() const { return weight.value.cols(); }
  Eigen::Index out_features() const { return weight.value.rows(); }
  void SetTrainable(bool trainable);
  void CollectParameters(std::vector<Parameter*>& out);

  Parameter weight;
  Parameter bias;
};

class LayerNorm {
 public:
  struct Cache {
    Matrix normalized;
    Eigen::VectorXd inv_std;
  };

  LayerNorm() = default;
  LayerNorm(std::string name, Eigen::Index width, double eps);

  Matrix Forward(const Matrix& x, Cache* cache) const;
  Matrix Backward(const Matrix& dy, const Cache& cache);

  void SetTrainable(bool trainable);
  void CollectParameters(std::vector<Parameter*>& out);

  Parameter gamma;
  Parameter beta;
  double eps = 1e-12;
};

// Inverted dropout mask with entries 0 or 1/(1-p); all ones in inference
// mode or when p == 0.
Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Mode mode,
                   Rng& rng);

Matrix Gelu(const Matrix& x);
Matrix GeluGrad(const Matrix& x);

// Row-wise softmax.
Matrix Softmax(const Matrix& logits);

// Mean cross-entropy over rows. Writes dL/dlogits when `grad` is non-null.
// Throws Error(kLabelOutOfRange) / Error(kLengthMismatch).
double CrossEntropy(const Matrix& logits, const std::vector<int>& gold,
                    Matrix* grad = nullptr);

}  // namespace wsbert
