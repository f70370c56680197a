#include "sublab/submersion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sublab/bundle.hpp"
#include "sublab/transport.hpp"

namespace sublab {

Vec SubmersionMap::operator()(const Vec& x) const { return base.wrap(map_field(total.wrap(x))); }

SubmersionMap SubmersionMap::rescaled(double g_factor, double h_factor) const {
  SubmersionMap out = *this;
  out.total = total.rescaled(g_factor);
  out.base = base.rescaled(h_factor);
  return out;
}

namespace {

Mat chart_jacobian(const SubmersionMap& f, const Vec& x) {
  if (f.jacobian_field) return (*f.jacobian_field)(f.total.wrap(x));
  const int m = f.total.dim();
  const double h = f.fd_step;
  f.total.require_ball(x, h, "jacobian");
  Mat jac(f.base.dim(), m);
  for (int i = 0; i < m; ++i) {
    Vec plus = x, minus = x;
    plus[i] += h;
    minus[i] -= h;
    jac.col(i) = f.base.difference(f(plus), f(minus)) / (2.0 * h);
  }
  return jac;
}

Mat cholesky_lower(const ChartedManifold& manifold, const Vec& x) {
  Eigen::LLT<Mat> llt(manifold.metric(x));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Conditioning, manifold.name() + ": metric is not positive definite");
  return llt.matrixL();
}

// J̃ = L_hᵀ J L_g⁻ᵀ: the differential in orthonormal frames.
Mat orthonormal_jacobian(const SubmersionMap& f, const Vec& x, const Mat& jac, const Mat& lg) {
  const Mat lh = cholesky_lower(f.base, f(x));
  const Mat right = lg.transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(
      Mat(lh.transpose() * jac));
  return right;
}

void require_rank(const SubmersionMap& f, const Vec& x, const Vec& singular) {
  const int n = f.base.dim();
  if (singular.size() < n || !(singular[n - 1] > kMinRankSingularValue))
    throw Error(ErrorKind::NotASubmersion,
                f.name + ": differential loses rank at a sampled point (min singular value " +
                    std::to_string(singular.size() ? singular[singular.size() - 1] : 0.0) + ")");
  (void)x;
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()[0];
}

}  // namespace

Mat differential_at(const SubmersionMap& f, const Vec& x) {
  const Mat jac = chart_jacobian(f, x);
  const Mat lg = cholesky_lower(f.total, x);
  Eigen::JacobiSVD<Mat> svd(orthonormal_jacobian(f, x, jac, lg));
  require_rank(f, x, svd.singularValues());
  return jac;
}

VerticalSplit split_at(const SubmersionMap& f, const Vec& x) {
  const int m = f.total.dim();
  const int n = f.base.dim();
  const Mat jac = chart_jacobian(f, x);
  const Mat lg = cholesky_lower(f.total, x);
  Eigen::JacobiSVD<Mat> svd(orthonormal_jacobian(f, x, jac, lg), Eigen::ComputeFullV);
  require_rank(f, x, svd.singularValues());
  const Mat v = svd.matrixV();
  auto back = [&](const Mat& cols) -> Mat {
    return lg.transpose().triangularView<Eigen::Upper>().solve(cols);
  };
  VerticalSplit out;
  out.point = x;
  out.horizontal = back(v.leftCols(n));
  out.vertical = back(v.rightCols(m - n));
  return out;
}

Mat horizontal_projector(const SubmersionMap& f, const Vec& x) {
  const Mat jac = chart_jacobian(f, x);
  Eigen::LLT<Mat> g(f.total.metric(x));
  const Mat ginv_jt = g.solve(Mat(jac.transpose()));
  Eigen::LLT<Mat> k(jac * ginv_jt);
  if (k.info() != Eigen::Success)
    throw Error(ErrorKind::Conditioning, f.name + ": horizontal restriction is singular");
  return ginv_jt * k.solve(jac);
}

Vec horizontal_preimage(const SubmersionMap& f, const Vec& x, const Vec& w) {
  const Mat jac = chart_jacobian(f, x);
  Eigen::LLT<Mat> g(f.total.metric(x));
  const Mat ginv_jt = g.solve(Mat(jac.transpose()));
  Eigen::LLT<Mat> k(jac * ginv_jt);
  if (k.info() != Eigen::Success)
    throw Error(ErrorKind::Conditioning, f.name + ": horizontal restriction is singular");
  return ginv_jt * k.solve(w);
}

Vec horizontal_singular_values(const SubmersionMap& f, const Vec& x) {
  const Mat jac = chart_jacobian(f, x);
  const Mat lg = cholesky_lower(f.total, x);
  // df vanishes on the vertical space, so the nonzero singular values of J̃ are
  // exactly those of its restriction to the horizontal space.
  Eigen::JacobiSVD<Mat> svd(orthonormal_jacobian(f, x, jac, lg));
  require_rank(f, x, svd.singularValues());
  return svd.singularValues().head(f.base.dim());
}

double delta_at(const SubmersionMap& f, const Vec& x) {
  const Vec s = horizontal_singular_values(f, x);
  return std::max(std::abs(std::log(s[0])), std::abs(std::log(s[s.size() - 1])));
}

namespace {

// Central differences of the horizontal projector along each chart axis.
std::array<Mat, kMaxDim> projector_derivatives(const SubmersionMap& f, const Vec& x) {
  const int m = f.total.dim();
  const double h = f.total.fd_step();
  f.total.require_ball(x, f.jacobian_field ? h : h + f.fd_step, "frame extension");
  std::array<Mat, kMaxDim> out;
  for (int k = 0; k < m; ++k) {
    Vec plus = x, minus = x;
    plus[k] += h;
    minus[k] -= h;
    out[k] = (horizontal_projector(f, plus) - horizontal_projector(f, minus)) / (2.0 * h);
  }
  return out;
}

// D_u Y for the field Y(y) = P(y) y0, given dP along the chart axes.
Vec directional(const std::array<Mat, kMaxDim>& dp, const Vec& u, const Vec& y0) {
  Vec out = Vec::Zero(y0.size());
  for (int k = 0; k < u.size(); ++k) out += u[k] * (dp[k] * y0);
  return out;
}

}  // namespace

TensorAt second_fundamental_form_at(const SubmersionMap& f, const Vec& x) {
  const VerticalSplit split = split_at(f, x);
  const int k = static_cast<int>(split.vertical.cols());
  const int n = static_cast<int>(split.horizontal.cols());
  const std::array<Mat, kMaxDim> dph = projector_derivatives(f, x);
  std::array<Mat, kMaxDim> dpv;
  for (int i = 0; i < f.total.dim(); ++i) dpv[i] = -dph[i];
  const Mat ph = horizontal_projector(f, x);
  const Christoffel gamma = f.total.christoffel(x);
  const Mat g = f.total.metric(x);

  TensorAt out;
  out.components.resize(static_cast<std::size_t>(k * k));
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      const Vec ta = split.vertical.col(a), tb = split.vertical.col(b);
      out.components[a * k + b] = ph * (directional(dpv, ta, tb) + gamma.contract(ta, tb));
    }
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      const Vec sym = 0.5 * (out.components[a * k + b] + out.components[b * k + a]);
      out.components[a * k + b] = sym;
      out.components[b * k + a] = sym;
    }
  double sum = 0.0;
  for (int c = 0; c < n; ++c) {
    const Vec hc = g * split.horizontal.col(c);
    Mat form(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) form(a, b) = hc.dot(out.components[a * k + b]);
    if (k == 0) continue;
    Eigen::SelfAdjointEigenSolver<Mat> eig(form, Eigen::EigenvaluesOnly);
    const double top = eig.eigenvalues().cwiseAbs().maxCoeff();
    sum += top * top;
  }
  out.norm = std::sqrt(sum);
  return out;
}

TensorAt integrability_tensor_at(const SubmersionMap& f, const Vec& x) {
  const VerticalSplit split = split_at(f, x);
  const int n = static_cast<int>(split.horizontal.cols());
  const std::array<Mat, kMaxDim> dph = projector_derivatives(f, x);
  const Mat pv = Mat::Identity(f.total.dim(), f.total.dim()) - horizontal_projector(f, x);
  const Mat g = f.total.metric(x);

  TensorAt out;
  out.components.assign(static_cast<std::size_t>(n * n), Vec::Zero(f.total.dim()));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const Vec xi = split.horizontal.col(i), xj = split.horizontal.col(j);
      const Vec bracket = directional(dph, xi, xj) - directional(dph, xj, xi);
      const Vec a = pv * bracket;
      out.components[i * n + j] = a;
      out.components[j * n + i] = -a;
      out.norm = std::max(out.norm, std::sqrt(std::max(a.dot(g * a), 0.0)));
    }
  return out;
}

namespace {

Mat orthonormal_basis(const Mat& lower, const Mat& v) {
  const Mat w = lower.transpose() * v;
  Eigen::HouseholderQR<Mat> qr(w);
  return qr.householderQ() * Mat::Identity(w.rows(), w.cols());
}

bool lex_less(const Mat& a, const Mat& b) {
  if (a.rows() != b.rows()) return a.rows() < b.rows();
  if (a.cols() != b.cols()) return a.cols() < b.cols();
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

double dihedral_angle(const ChartedManifold& manifold, const Vec& x, const Mat& v1, const Mat& v2) {
  if (v1.cols() != v2.cols() || v1.rows() != v2.rows())
    throw Error(ErrorKind::Contract, "dihedral angle needs subspaces of equal dimension");
  if (v1.cols() == 0) return 0.0;
  const bool swap = lex_less(v2, v1);
  const Mat& a = swap ? v2 : v1;
  const Mat& b = swap ? v1 : v2;
  const Mat lower = cholesky_lower(manifold, x);
  const Mat qa = orthonormal_basis(lower, a);
  const Mat qb = orthonormal_basis(lower, b);
  const int m = static_cast<int>(qa.rows());
  // Small angles from the sine (well conditioned), large ones from the cosine.
  const Mat residual = (Mat::Identity(m, m) - qb * qb.transpose()) * qa;
  const double s = std::min(spectral_norm(residual), 1.0);
  if (s < 0.7) return std::asin(s);
  Eigen::JacobiSVD<Mat> svd(Mat(qa.transpose() * qb));
  const double c = std::clamp(svd.singularValues()[svd.singularValues().size() - 1], 0.0, 1.0);
  return std::acos(c);
}

double sampled_hausdorff_angle(const ChartedManifold& manifold, const Vec& x, const Mat& v1,
                               const Mat& v2, int samples, std::uint64_t seed) {
  if (v1.cols() != v2.cols()) throw Error(ErrorKind::Contract, "subspace dimensions differ");
  const Mat lower = cholesky_lower(manifold, x);
  const Mat q1 = orthonormal_basis(lower, v1);
  const Mat q2 = orthonormal_basis(lower, v2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  // Distance from a unit vector u to the unit sphere of span(q) is acos |qᵀu|.
  auto one_side = [&](const Mat& from, const Mat& to) {
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      Vec z(from.cols());
      for (int i = 0; i < z.size(); ++i) z[i] = normal(rng);
      const Vec u = from * z.normalized();
      const double c = std::clamp((to.transpose() * u).norm(), 0.0, 1.0);
      worst = std::max(worst, std::acos(c));
    }
    return worst;
  };
  const double d12 = one_side(q1, q2);
  const double d21 = one_side(q2, q1);
  return std::max(d12, d21);
}

double map_distance(const SubmersionMap& f1, const SubmersionMap& f2, const std::vector<Vec>& grid,
                    double trust_radius) {
  double worst = 0.0;
  for (const Vec& x : grid)
    worst = std::max(worst, geodesic_distance(f1.base, f1(x), f2(x), trust_radius));
  return worst;
}

namespace {

Vec random_unit(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> normal;
  Vec z(dim);
  do {
    for (int i = 0; i < dim; ++i) z[i] = normal(rng);
  } while (z.norm() < 1e-12);
  return z.normalized();
}

}  // namespace

LclResult lcl_check(const SubmersionMap& f, double q, const Vec& x, double r, int sample_budget,
                    double trust_radius, std::uint64_t seed) {
  if (!(q >= 1.0)) throw Error(ErrorKind::Validation, "LcL constant must be at least 1");
  if (!(r > 0.0) || r > trust_radius)
    throw Error(ErrorKind::OutOfRange, "LcL radius must be positive and inside the trust radius");
  const int m = f.total.dim();
  const int n = f.base.dim();
  const Vec p = f(x);
  const MetricAt gx = metric_at(f.total, x);
  const MetricAt hp = metric_at(f.base, p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  constexpr double kRelSlack = 1e-9;

  LclResult out;
  const int forward = std::max(1, sample_budget / 2);
  const int backward = std::max(1, sample_budget - forward);
  for (int s = 0; s < forward; ++s) {
    // Every other sample sits on the boundary sphere, where inclusions are tight.
    const double rho = s % 2 == 0 ? r : r * std::pow(uniform(rng), 1.0 / m);
    const Vec v = gx.from_orthonormal(Vec(rho * random_unit(rng, m)));
    const Vec y = geodesic_endpoint(f.total, x, v, 1.0, steps_for_length(rho));
    const double d = geodesic_distance(f.base, p, f(y), trust_radius);
    ++out.samples;
    out.forward_ratio = std::max(out.forward_ratio, d / r);
    if (d > q * r * (1.0 + kRelSlack) + 1e-12 && out.forward_pass) {
      out.forward_pass = false;
      out.witness = f.total.wrap(y);
      out.witness_kind = "forward";
    }
  }
  for (int s = 0; s < backward; ++s) {
    const double rho = (r / q) * (s % 2 == 0 ? 1.0 : std::pow(uniform(rng), 1.0 / n));
    const Vec w = hp.from_orthonormal(Vec(rho * random_unit(rng, n)));
    const DiscreteCurve lift = lift_base_geodesic(f, x, w, steps_for_length(rho));
    double d;
    try {
      d = geodesic_distance(f.total, x, lift.back(), trust_radius);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OutOfRange && e.kind() != ErrorKind::NoConvergence) throw;
      d = curve_length(f.total, lift);  // an upper bound for the distance
    }
    ++out.samples;
    out.backward_ratio = std::max(out.backward_ratio, d / r);
    if (d > r * (1.0 + kRelSlack) + 1e-12 && out.backward_pass) {
      out.backward_pass = false;
      if (!out.witness) {
        out.witness = geodesic_endpoint(f.base, p, w, 1.0, steps_for_length(rho));
        out.witness_kind = "backward";
      }
    }
  }
  out.pass = out.forward_pass && out.backward_pass;
  return out;
}

GhaResult gha_check(const Eigen::MatrixXd& dx, const Eigen::MatrixXd& dy,
                    const std::vector<int>& correspondence, double epsilon,
                    const Eigen::MatrixXd* cross) {
  const int nx = static_cast<int>(dx.rows());
  const int ny = static_cast<int>(dy.rows());
  if (static_cast<int>(correspondence.size()) != nx)
    throw Error(ErrorKind::Contract, "correspondence must assign one image per X sample");
  for (int j : correspondence)
    if (j < 0 || j >= ny) throw Error(ErrorKind::Contract, "correspondence index out of range");
  GhaResult out;
  for (int i = 0; i < nx; ++i)
    for (int k = i + 1; k < nx; ++k) {
      const double d = std::abs(dy(correspondence[i], correspondence[k]) - dx(i, k));
      if (d > out.distortion) {
        out.distortion = d;
        out.worst_pair = {i, k};
      }
    }
  for (int y = 0; y < ny; ++y) {
    double nearest = std::numeric_limits<double>::infinity();
    for (int i = 0; i < nx; ++i) nearest = std::min(nearest, dy(y, correspondence[i]));
    out.density_gap = std::max(out.density_gap, nearest);
  }
  if (cross) {
    double worst = 0.0;
    for (int i = 0; i < nx; ++i) worst = std::max(worst, (*cross)(i, correspondence[i]));
    out.displacement = worst;
  }
  out.pass = out.distortion < epsilon && out.density_gap <= epsilon;
  return out;
}

}  // namespace sublab
