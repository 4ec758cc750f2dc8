#include "wnlab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "wnlab/fft.hpp"

namespace wnlab {

namespace {

bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

int wrap_index(int n, int r) { return ((n % r) + r) % r; }

}  // namespace

FourierField::FourierField(int cutoff, bool real)
    : cutoff_(cutoff), real_(real), coeffs_(static_cast<std::size_t>(2 * cutoff + 1) * (2 * cutoff + 1)) {
  if (cutoff < 0) throw std::invalid_argument("FourierField: negative cutoff");
}

void FourierField::set(const Mode& n, cplx value) {
  if (n.sup_norm() > cutoff_) throw std::invalid_argument("FourierField::set: mode outside cutoff");
  if (!finite(value)) throw std::invalid_argument("FourierField::set: non-finite coefficient");
  if (real_) {
    if (n.n1 == 0 && n.n2 == 0) {
      if (value.imag() != 0.0) throw std::invalid_argument("FourierField::set: zero mode of a real field must be real");
      coeffs_[index(n)] = value;
      return;
    }
    coeffs_[index(-n)] = std::conj(value);
  }
  coeffs_[index(n)] = value;
}

FourierField FourierField::embedded(int cutoff) const {
  if (cutoff < cutoff_) throw std::invalid_argument("FourierField::embedded: cutoff smaller than current");
  FourierField out(cutoff, real_);
  for_each([&](const Mode& n, cplx c) { out.set_raw(n, c); });
  return out;
}

FourierField FourierField::truncated(int cutoff) const {
  if (cutoff > cutoff_) return embedded(cutoff);
  FourierField out(cutoff, real_);
  out.for_each([&](const Mode& n, cplx) { out.set_raw(n, (*this)(n)); });
  return out;
}

FourierField& FourierField::operator+=(const FourierField& other) {
  if (other.cutoff_ > cutoff_) *this = embedded(other.cutoff_);
  real_ = real_ && other.real_;
  other.for_each([&](const Mode& n, cplx c) { coeffs_[index(n)] += c; });
  return *this;
}

FourierField& FourierField::operator-=(const FourierField& other) {
  if (other.cutoff_ > cutoff_) *this = embedded(other.cutoff_);
  real_ = real_ && other.real_;
  other.for_each([&](const Mode& n, cplx c) { coeffs_[index(n)] -= c; });
  return *this;
}

FourierField& FourierField::operator*=(double s) {
  for (auto& c : coeffs_) c *= s;
  return *this;
}

FourierField operator+(FourierField a, const FourierField& b) { return a += b; }
FourierField operator-(FourierField a, const FourierField& b) { return a -= b; }
FourierField operator*(double s, FourierField a) { return a *= s; }

FourierField dirac_mass(const Vec2& x0, int cutoff) {
  FourierField f(cutoff, true);
  f.for_each([&](const Mode& n, cplx) {
    const double phase = -kTwoPi * (n.n1 * x0.x + n.n2 * x0.y);
    f.set_raw(n, {std::cos(phase), std::sin(phase)});
  });
  return f;
}

// ---------------------------------------------------------------------------
// TrigPoly

TrigPoly::TrigPoly(std::map<Mode, cplx> coefficients) : coeffs_(std::move(coefficients)) {
  for (auto it = coeffs_.begin(); it != coeffs_.end();) {
    if (!finite(it->second)) throw std::invalid_argument("TrigPoly: non-finite coefficient");
    if (it->second == cplx{}) {
      it = coeffs_.erase(it);
      continue;
    }
    ++it;
  }
  for (const auto& [n, c] : coeffs_) {
    const cplx mirror = coefficient(-n);
    if (std::abs(mirror - std::conj(c)) > 1e-14 * std::max(1.0, std::abs(c)))
      throw std::invalid_argument("TrigPoly: coefficients are not Hermitian");
  }
}

TrigPoly TrigPoly::constant(double c) { return TrigPoly({{Mode{0, 0}, cplx{c, 0.0}}}); }

TrigPoly TrigPoly::cosine(Mode n, double amp) {
  if (n == Mode{0, 0}) return constant(amp);
  return TrigPoly({{n, cplx{0.5 * amp, 0.0}}, {-n, cplx{0.5 * amp, 0.0}}});
}

TrigPoly TrigPoly::sine(Mode n, double amp) {
  if (n == Mode{0, 0}) return {};
  // sin(t) = (e^{it} - e^{-it}) / 2i
  return TrigPoly({{n, cplx{0.0, -0.5 * amp}}, {-n, cplx{0.0, 0.5 * amp}}});
}

TrigPoly TrigPoly::shifted(const Vec2& a) const {
  std::map<Mode, cplx> out;
  for (const auto& [n, c] : coeffs_) {
    const double phase = -kTwoPi * (n.n1 * a.x + n.n2 * a.y);
    out[n] = c * cplx{std::cos(phase), std::sin(phase)};
  }
  return TrigPoly(std::move(out));
}

TrigPoly TrigPoly::operator+(const TrigPoly& other) const {
  std::map<Mode, cplx> out = coeffs_;
  for (const auto& [n, c] : other.coeffs_) out[n] += c;
  return TrigPoly(std::move(out));
}

TrigPoly TrigPoly::operator*(double s) const {
  std::map<Mode, cplx> out = coeffs_;
  for (auto& [n, c] : out) c *= s;
  return TrigPoly(std::move(out));
}

cplx TrigPoly::coefficient(const Mode& n) const {
  auto it = coeffs_.find(n);
  return it == coeffs_.end() ? cplx{} : it->second;
}

int TrigPoly::degree() const {
  int d = 0;
  for (const auto& [n, c] : coeffs_) d = std::max(d, n.sup_norm());
  return d;
}

double TrigPoly::value(const Vec2& x) const {
  double s = 0.0;
  for (const auto& [n, c] : coeffs_) {
    const double t = kTwoPi * (n.n1 * x.x + n.n2 * x.y);
    s += c.real() * std::cos(t) - c.imag() * std::sin(t);
  }
  return s;
}

Vec2 TrigPoly::gradient(const Vec2& x) const {
  // d/dx_k Re(c e^{2 pi i n.x}) = Re(2 pi i n_k c e^{...}) = -2 pi n_k Im(c e^{...})
  Vec2 g;
  for (const auto& [n, c] : coeffs_) {
    const double t = kTwoPi * (n.n1 * x.x + n.n2 * x.y);
    const double im = c.real() * std::sin(t) + c.imag() * std::cos(t);
    g.x -= kTwoPi * n.n1 * im;
    g.y -= kTwoPi * n.n2 * im;
  }
  return g;
}

Mat2 TrigPoly::hessian(const Vec2& x) const {
  Mat2 h;
  const double w = kTwoPi * kTwoPi;
  for (const auto& [n, c] : coeffs_) {
    const double t = kTwoPi * (n.n1 * x.x + n.n2 * x.y);
    const double re = c.real() * std::cos(t) - c.imag() * std::sin(t);
    h.xx -= w * n.n1 * n.n1 * re;
    h.xy -= w * n.n1 * n.n2 * re;
    h.yy -= w * n.n2 * n.n2 * re;
  }
  h.yx = h.xy;
  return h;
}

double TrigPoly::l2_inner(const TrigPoly& other) const {
  // <f, g> = sum_n f^(n) g^(-n)
  double s = 0.0;
  for (const auto& [n, c] : coeffs_) s += (c * other.coefficient(-n)).real();
  return s;
}

double TrigPoly::hessian_sup_bound() const {
  double s = 0.0;
  for (const auto& [n, c] : coeffs_) s += std::abs(c) * kTwoPi * kTwoPi * static_cast<double>(n.norm2());
  return s;
}

FourierField TrigPoly::as_field(int cutoff) const {
  if (degree() > cutoff) throw std::invalid_argument("TrigPoly::as_field: cutoff below degree");
  FourierField f(cutoff, true);
  for (const auto& [n, c] : coeffs_) f.set_raw(n, c);
  return f;
}

double pair(const FourierField& omega, const TrigPoly& phi) {
  double s = 0.0;
  for (const auto& [n, c] : phi.coefficients()) s += (omega(-n) * c).real();
  return s;
}

// ---------------------------------------------------------------------------
// Norms

double sobolev_norm(const FourierField& field, double s) {
  double acc = 0.0;
  field.for_each([&](const Mode& n, cplx c) {
    if (c == cplx{}) return;
    acc += std::pow(1.0 + static_cast<double>(n.norm2()), s) * std::norm(c);
  });
  return std::sqrt(acc);
}

double h_minus_metric(const FourierField& a, const FourierField& b, int terms) {
  if (terms <= 0) throw std::invalid_argument("h_minus_metric: terms must be positive");
  const FourierField diff = a.cutoff() >= b.cutoff() ? a - b.embedded(a.cutoff()) : a.embedded(b.cutoff()) - b;
  double d = 0.0;
  double weight = 0.5;
  for (int k = 1; k <= terms; ++k, weight *= 0.5) {
    d += weight * std::min(sobolev_norm(diff, -1.0 - 1.0 / k), 1.0);
  }
  return d;
}

FourierField bessel_smooth(const FourierField& field, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("bessel_smooth: eps must be positive");
  FourierField out(field.cutoff(), field.is_real());
  field.for_each([&](const Mode& n, cplx c) {
    out.set_raw(n, c * std::pow(1.0 + static_cast<double>(n.norm2()), -0.5 * (1.0 + eps)));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Grids

bool is_power_of_two(int r) { return r > 0 && (r & (r - 1)) == 0; }

GridField::GridField(int resolution, std::vector<double> values) : resolution_(resolution), values_(std::move(values)) {
  if (!is_power_of_two(resolution)) throw std::invalid_argument("GridField: resolution must be a power of two");
  if (values_.size() != static_cast<std::size_t>(resolution) * resolution)
    throw std::invalid_argument("GridField: value count does not match resolution");
  for (double v : values_)
    if (!std::isfinite(v)) throw std::invalid_argument("GridField: non-finite sample");
}

GridField::GridField(int resolution)
    : GridField(resolution, std::vector<double>(static_cast<std::size_t>(resolution) * resolution, 0.0)) {}

GridField synthesize(const FourierField& field, int resolution) {
  if (!field.is_real()) throw std::invalid_argument("synthesize: field is not real");
  if (!is_power_of_two(resolution)) throw std::invalid_argument("synthesize: resolution must be a power of two");
  if (resolution < 2 * field.cutoff() + 2)
    throw std::invalid_argument("synthesize: resolution " + std::to_string(resolution) + " aliases cutoff " +
                                std::to_string(field.cutoff()));
  RealFft2D fft(resolution);
  auto spec = fft.spectrum();
  std::fill(spec.begin(), spec.end(), cplx{});
  const int cols = fft.spectral_cols();
  const int m = field.cutoff();
  for (int a = -m; a <= m; ++a)
    for (int b = 0; b <= m; ++b)
      spec[static_cast<std::size_t>(wrap_index(a, resolution)) * cols + b] = field({a, b});
  fft.inverse();
  auto real = fft.real();
  return GridField(resolution, std::vector<double>(real.begin(), real.end()));
}

FourierField analyze(const GridField& grid, int cutoff) {
  const int r = grid.resolution();
  if (r < 2 * cutoff + 2) throw std::invalid_argument("analyze: resolution too small for cutoff");
  RealFft2D fft(r);
  std::copy(grid.values().begin(), grid.values().end(), fft.real().begin());
  fft.forward();
  auto spec = fft.spectrum();
  const int cols = fft.spectral_cols();
  const double scale = 1.0 / (static_cast<double>(r) * r);
  FourierField f(cutoff, true);
  for (int a = -cutoff; a <= cutoff; ++a)
    for (int b = 0; b <= cutoff; ++b) {
      const cplx c = spec[static_cast<std::size_t>(wrap_index(a, r)) * cols + b] * scale;
      f.set_raw({a, b}, c);
      if (b > 0 || a != 0) f.set_raw({-a, -b}, std::conj(c));
    }
  f.set_raw({0, 0}, {f({0, 0}).real(), 0.0});
  return f;
}

// ---------------------------------------------------------------------------
// Serialization

nlohmann::json to_json(const FourierField& field) {
  nlohmann::json modes = nlohmann::json::array();
  field.for_each([&](const Mode& n, cplx c) {
    if (c == cplx{}) return;
    if (field.is_real() && !(in_half_lattice(n) || n == Mode{0, 0})) return;
    modes.push_back({n.n1, n.n2, c.real(), c.imag()});
  });
  return {{"cutoff", field.cutoff()}, {"real", field.is_real()}, {"modes", modes}};
}

FourierField field_from_json(const nlohmann::json& j) {
  const int cutoff = j.at("cutoff").get<int>();
  const bool real = j.value("real", true);
  FourierField f(cutoff, real);
  for (const auto& entry : j.at("modes")) {
    if (!entry.is_array() || entry.size() != 4) throw std::invalid_argument("FourierField JSON: mode entry must be [n1, n2, re, im]");
    const Mode n{entry[0].get<int>(), entry[1].get<int>()};
    if (real && !(in_half_lattice(n) || n == Mode{0, 0}))
      throw std::invalid_argument("FourierField JSON: real fields store only the half lattice");
    f.set(n, {entry[2].get<double>(), entry[3].get<double>()});
  }
  return f;
}

}  // namespace wnlab
