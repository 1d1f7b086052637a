#include "wsbert/nn.hpp"

#include <cmath>
#include <numbers>

#include "wsbert/error.hpp"

namespace wsbert {

Parameter::Parameter(std::string n, Eigen::Index rows, Eigen::Index cols)
    : name(std::move(n)),
      value(Matrix::Zero(rows, cols)),
      grad(Matrix::Zero(rows, cols)) {}

void InitNormal(Parameter& p, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < p.value.size(); ++i) {
    p.value.data()[i] = dist(rng);
  }
}

Linear::Linear(std::string name, Eigen::Index in, Eigen::Index out)
    : weight(name + ".weight", out, in), bias(name + ".bias", 1, out) {}

void Linear::Init(double stddev, Rng& rng) {
  InitNormal(weight, stddev, rng);
  bias.value.setZero();
}

Matrix Linear::Forward(const Matrix& x) const {
  Matrix y = x * weight.value.transpose();
  y.rowwise() += bias.value.row(0);
  return y;
}

Matrix Linear::Backward(const Matrix& x, const Matrix& dy) {
  if (weight.trainable) weight.grad.noalias() += dy.transpose() * x;
  if (bias.trainable) bias.grad.row(0) += dy.colwise().sum();
  return dy * weight.value;
}

void Linear::SetTrainable(bool trainable) {
  weight.trainable = trainable;
  bias.trainable = trainable;
}

void Linear::CollectParameters(std::vector<Parameter*>& out) {
  out.push_back(&weight);
  out.push_back(&bias);
}

LayerNorm::LayerNorm(std::string name, Eigen::Index width, double eps_value)
    : gamma(name + ".gamma", 1, width),
      beta(name + ".beta", 1, width),
      eps(eps_value) {
  gamma.value.setOnes();
}

Matrix LayerNorm::Forward(const Matrix& x, Cache* cache) const {
  const Eigen::Index n = x.cols();
  Matrix normalized(x.rows(), n);
  Eigen::VectorXd inv_std(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    double mean = x.row(r).mean();
    double var = (x.row(r).array() - mean).square().sum() / n;
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    normalized.row(r) = (x.row(r).array() - mean) * inv_std(r);
  }
  Matrix y = normalized.array().rowwise() * gamma.value.row(0).array();
  y.rowwise() += beta.value.row(0);
  if (cache != nullptr) {
    cache->normalized = std::move(normalized);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Matrix LayerNorm::Backward(const Matrix& dy, const Cache& cache) {
  const Matrix& xhat = cache.normalized;
  const double n = static_cast<double>(dy.cols());
  if (gamma.trainable) {
    gamma.grad.row(0) += (dy.array() * xhat.array()).colwise().sum().matrix();
  }
  if (beta.trainable) beta.grad.row(0) += dy.colwise().sum();
  Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    double sum = dxhat.row(r).sum();
    double dot = dxhat.row(r).dot(xhat.row(r));
    dx.row(r) = (cache.inv_std(r) / n) *
                (n * dxhat.row(r).array() - sum - xhat.row(r).array() * dot);
  }
  return dx;
}

void LayerNorm::SetTrainable(bool trainable) {
  gamma.trainable = trainable;
  beta.trainable = trainable;
}

void LayerNorm::CollectParameters(std::vector<Parameter*>& out) {
  out.push_back(&gamma);
  out.push_back(&beta);
}

Matrix DropoutMask(Eigen::Index rows, Eigen::Index cols, double p, Mode mode,
                   Rng& rng) {
  if (mode == Mode::kInference || p <= 0.0) return Matrix::Ones(rows, cols);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double scale = 1.0 / (1.0 - p);
  Matrix mask(rows, cols);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = uniform(rng) < p ? 0.0 : scale;
  }
  return mask;
}

Matrix Gelu(const Matrix& x) {
  return x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
  });
}

Matrix GeluGrad(const Matrix& x) {
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return x.unaryExpr([inv_sqrt_2pi](double v) {
    double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
    double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
    return cdf + v * pdf;
  });
}

Matrix Softmax(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    double max = logits.row(r).maxCoeff();
    RowVector e = (logits.row(r).array() - max).exp().matrix();
    out.row(r) = e / e.sum();
  }
  return out;
}

double CrossEntropy(const Matrix& logits, const std::vector<int>& gold,
                    Matrix* grad) {
  if (static_cast<Eigen::Index>(gold.size()) != logits.rows()) {
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(gold.size()) + " labels for " +
                    std::to_string(logits.rows()) + " logit rows");
  }
  if (logits.rows() == 0) {
    throw Error(ErrorCode::kLengthMismatch, "empty batch");
  }
  const double batch = static_cast<double>(logits.rows());
  double total = 0.0;
  if (grad != nullptr) grad->resize(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    int y = gold[r];
    if (y < 0 || y >= logits.cols()) {
      throw Error(ErrorCode::kLabelOutOfRange,
                  "gold label " + std::to_string(y) + " with " +
                      std::to_string(logits.cols()) + " classes");
    }
    double max = logits.row(r).maxCoeff();
    RowVector shifted = logits.row(r).array() - max;
    double log_sum = std::log(shifted.array().exp().sum());
    total += log_sum - shifted(y);
    if (grad != nullptr) {
      RowVector p = (shifted.array() - log_sum).exp().matrix();
      p(y) -= 1.0;
      grad->row(r) = p / batch;
    }
  }
  return total / batch;
}

}  // namespace wsbert
