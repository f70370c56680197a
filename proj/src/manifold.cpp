#include "sublab/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace sublab {

Vec Christoffel::contract(const Vec& u, const Vec& v) const {
  Vec out = Vec::Zero(dim_);
  for (int k = 0; k < dim_; ++k) {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) {
      if (u[i] == 0.0) continue;
      for (int j = 0; j < dim_; ++j) acc += (*this)(k, i, j) * u[i] * v[j];
    }
    out[k] = acc;
  }
  return out;
}

Mat Christoffel::contract_one(const Vec& u) const {
  Mat out = Mat::Zero(dim_, dim_);
  for (int k = 0; k < dim_; ++k)
    for (int i = 0; i < dim_; ++i) {
      double acc = 0.0;
      for (int j = 0; j < dim_; ++j) acc += (*this)(k, j, i) * u[j];
      out(k, i) = acc;
    }
  return out;
}

double Christoffel::max_abs() const {
  double best = 0.0;
  const int n = dim_ * dim_ * dim_;
  for (int idx = 0; idx < n; ++idx) best = std::max(best, std::abs(data_[idx]));
  return best;
}

namespace {

Christoffel christoffel_from(const Mat& g, const std::array<Mat, kMaxDim>& dg) {
  const int m = static_cast<int>(g.rows());
  const Mat g_inv = g.ldlt().solve(Mat::Identity(m, m));
  // First kind: Γ_{lij} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij}).
  Christoffel out(m);
  for (int i = 0; i < m; ++i)
    for (int j = i; j < m; ++j) {
      Vec first(m);
      for (int l = 0; l < m; ++l)
        first[l] = 0.5 * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
      const Vec second = g_inv * first;
      for (int k = 0; k < m; ++k) {
        out(k, i, j) = second[k];
        out(k, j, i) = second[k];
      }
    }
  return out;
}

}  // namespace

ChristoffelField closed_form_christoffel(MetricField metric, MetricDerivativeField derivative) {
  return [metric = std::move(metric), derivative = std::move(derivative)](const Vec& x) {
    return christoffel_from(metric(x), derivative(x));
  };
}

ChartedManifold::ChartedManifold(std::string name, std::vector<Axis> domain, MetricField metric,
                                 std::optional<ChristoffelField> christoffel, double fd_step) {
  if (domain.empty() || static_cast<int>(domain.size()) > kMaxDim)
    throw Error(ErrorKind::Validation, "chart dimension must be in [1, " +
                                           std::to_string(kMaxDim) + "]");
  for (const Axis& axis : domain)
    if (!(axis.hi > axis.lo)) throw Error(ErrorKind::Validation, "empty chart axis");
  if (!(fd_step > 0.0)) throw Error(ErrorKind::Validation, "fd_step must be positive");
  state_ = std::make_shared<const State>(State{std::move(name), std::move(domain),
                                               std::move(metric), std::move(christoffel),
                                               fd_step, 1.0});
}

Vec ChartedManifold::wrap(const Vec& x) const {
  const auto& axes = state_->domain;
  if (x.size() != dim()) throw Error(ErrorKind::Contract, "point dimension mismatch");
  Vec out = x;
  for (int i = 0; i < dim(); ++i) {
    const Axis& axis = axes[i];
    if (!std::isfinite(x[i])) throw Error(ErrorKind::Domain, "non-finite chart coordinate");
    if (axis.periodic) {
      double r = std::fmod(x[i] - axis.lo, axis.period());
      if (r < 0.0) r += axis.period();
      if (r >= axis.period()) r = 0.0;
      out[i] = axis.lo + r;
    } else if (!(x[i] > axis.lo && x[i] < axis.hi)) {
      std::ostringstream os;
      os << state_->name << ": coordinate " << i << " = " << x[i] << " outside (" << axis.lo
         << ", " << axis.hi << ")";
      throw Error(ErrorKind::Domain, os.str());
    }
  }
  return out;
}

bool ChartedManifold::contains(const Vec& x) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    const Axis& axis = state_->domain[i];
    if (!std::isfinite(x[i])) return false;
    if (!axis.periodic && !(x[i] > axis.lo && x[i] < axis.hi)) return false;
  }
  return true;
}

void ChartedManifold::require_ball(const Vec& x, double radius, const char* what) const {
  for (int i = 0; i < dim(); ++i) {
    const Axis& axis = state_->domain[i];
    if (axis.periodic) continue;
    if (!(x[i] - radius > axis.lo && x[i] + radius < axis.hi)) {
      std::ostringstream os;
      os << state_->name << ": " << what << " stencil of radius " << radius
         << " exits the chart on axis " << i << " at " << x[i];
      throw Error(ErrorKind::Domain, os.str());
    }
  }
}

Vec ChartedManifold::difference(const Vec& a, const Vec& b) const {
  Vec d = a - b;
  for (int i = 0; i < dim(); ++i) {
    const Axis& axis = state_->domain[i];
    if (!axis.periodic) continue;
    const double p = axis.period();
    d[i] -= p * std::floor(d[i] / p + 0.5);
  }
  return d;
}

Mat ChartedManifold::metric(const Vec& x) const {
  Mat g = state_->metric(wrap(x));
  if (state_->scale != 1.0) g *= state_->scale;
  return g;
}

Christoffel ChartedManifold::christoffel(const Vec& x) const {
  if (state_->christoffel) return (*state_->christoffel)(wrap(x));
  return finite_difference_christoffel(x);
}

Christoffel ChartedManifold::finite_difference_christoffel(const Vec& x) const {
  const int m = dim();
  const double h = state_->fd_step;
  require_ball(x, 2.0 * h, "christoffel");
  std::array<Mat, kMaxDim> dg;
  for (int l = 0; l < m; ++l) {
    Vec plus = x, minus = x;
    plus[l] += h;
    minus[l] -= h;
    dg[l] = (metric(plus) - metric(minus)) / (2.0 * h);
  }
  return christoffel_from(metric(x), dg);
}

ChartedManifold ChartedManifold::rescaled(double factor) const {
  if (!(factor > 0.0)) throw Error(ErrorKind::Validation, "rescale factor must be positive");
  State next = *state_;
  next.scale *= factor;
  return ChartedManifold(std::make_shared<const State>(std::move(next)));
}

double MetricAt::norm(const Vec& u) const { return std::sqrt(std::max(0.0, inner(u, u))); }

Vec MetricAt::from_orthonormal(const Vec& w) const {
  return chol.transpose().triangularView<Eigen::Upper>().solve(w);
}

Mat MetricAt::from_orthonormal(const Mat& w) const {
  return chol.transpose().triangularView<Eigen::Upper>().solve(w);
}

MetricAt metric_at(const ChartedManifold& manifold, const Vec& x) {
  const int m = manifold.dim();
  MetricAt out;
  out.g = manifold.metric(x);
  if (out.g.rows() != m || out.g.cols() != m)
    throw Error(ErrorKind::Contract, manifold.name() + ": metric field has wrong shape");
  const double scale = std::max(out.g.cwiseAbs().maxCoeff(), 1e-300);
  if ((out.g - out.g.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::Contract, manifold.name() + ": metric is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> eig(out.g, Eigen::EigenvaluesOnly);
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.max_eigenvalue = eig.eigenvalues().maxCoeff();
  if (!(out.min_eigenvalue > 0.0))
    throw Error(ErrorKind::Conditioning, manifold.name() + ": metric is not positive definite");
  if (out.max_eigenvalue / out.min_eigenvalue > kMaxConditionNumber)
    throw Error(ErrorKind::Conditioning, manifold.name() + ": metric condition number exceeds 1e12");
  Eigen::LLT<Mat> llt(out.g);
  out.chol = llt.matrixL();
  out.g_inv = llt.solve(Mat::Identity(m, m));
  return out;
}

ChristoffelAt christoffel_at(const ChartedManifold& manifold, const Vec& x) {
  manifold.wrap(x);
  ChristoffelAt out;
  out.gamma = manifold.christoffel(x);
  out.max_abs = out.gamma.max_abs();
  return out;
}

double sectional_curvature(const CurvatureReport& curvature, const Mat& g, const Vec& u,
                           const Vec& v) {
  const int m = curvature.dim;
  // <R(u, v)v, u>
  Vec rvv = Vec::Zero(m);
  for (int k = 0; k < m; ++k) {
    double acc = 0.0;
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) acc += curvature.R(k, l, i, j) * u[i] * v[j] * v[l];
    rvv[k] = acc;
  }
  const double area2 = u.dot(g * u) * v.dot(g * v) - std::pow(u.dot(g * v), 2);
  if (!(area2 > 0.0)) throw Error(ErrorKind::Contract, "degenerate 2-plane");
  return rvv.dot(g * u) / area2;
}

CurvatureReport curvature_at(const ChartedManifold& manifold, const Vec& x) {
  const int m = manifold.dim();
  const double h = manifold.fd_step();
  manifold.require_ball(x, 4.0 * h, "curvature");
  const MetricAt metric = metric_at(manifold, x);
  const double step = manifold.has_closed_form_christoffel() ? h : 2.0 * h;

  const Christoffel gamma = manifold.christoffel(x);
  std::array<Christoffel, kMaxDim> dgamma;  // dgamma[i] = ∂_i Γ
  for (int i = 0; i < m; ++i) {
    Vec plus = x, minus = x;
    plus[i] += step;
    minus[i] -= step;
    const Christoffel gp = manifold.christoffel(plus);
    const Christoffel gm = manifold.christoffel(minus);
    Christoffel d(m);
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b)
        for (int c = 0; c < m; ++c) d(a, b, c) = (gp(a, b, c) - gm(a, b, c)) / (2.0 * step);
    dgamma[i] = d;
  }

  CurvatureReport out;
  out.dim = m;
  out.riemann.assign(static_cast<std::size_t>(m * m * m * m), 0.0);
  for (int k = 0; k < m; ++k)
    for (int l = 0; l < m; ++l)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double value = dgamma[i](k, j, l) - dgamma[j](k, i, l);
          for (int p = 0; p < m; ++p)
            value += gamma(k, i, p) * gamma(p, j, l) - gamma(k, j, p) * gamma(p, i, l);
          out.riemann[static_cast<std::size_t>(((k * m + l) * m + i) * m + j)] = value;
        }

  Mat ricci = Mat::Zero(m, m);
  for (int l = 0; l < m; ++l)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) ricci(l, j) += out.R(i, l, i, j);
  out.ricci = 0.5 * (ricci + ricci.transpose());

  // Ricci endomorphism in a g-orthonormal frame: L⁻¹ Ric L⁻ᵀ.
  const Mat linv = metric.chol.triangularView<Eigen::Lower>().solve(Mat::Identity(m, m));
  const Mat ric_on = linv * out.ricci * linv.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (ric_on + ric_on.transpose()),
                                         Eigen::EigenvaluesOnly);
  out.ricci_operator_norm = eig.eigenvalues().cwiseAbs().maxCoeff();

  if (m >= 2) {
    std::vector<std::pair<Vec, Vec>> planes;
    const Mat frame = metric.from_orthonormal(Mat(Mat::Identity(m, m)));
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        planes.emplace_back(Vec::Unit(m, i), Vec::Unit(m, j));
        planes.emplace_back(frame.col(i), frame.col(j));
      }
    if (m >= 3) {
      const Vec diagonal = Vec::Ones(m);
      for (int i = 0; i < m; ++i) planes.emplace_back(diagonal, Vec::Unit(m, i));
      for (int i = 0; i < m; ++i)
        for (int j = i + 1; j < m; ++j)
          for (int k = 0; k < m; ++k)
            if (k != i && k != j) planes.emplace_back(Vec::Unit(m, i) + Vec::Unit(m, j), Vec::Unit(m, k));
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& [u, v] : planes) {
      const double k = sectional_curvature(out, metric.g, u, v);
      lo = std::min(lo, k);
      hi = std::max(hi, k);
    }
    out.sectional_range = {lo, hi};
  }
  return out;
}

}  // namespace sublab
