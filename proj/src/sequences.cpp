#include "pexp/sequences.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace pexp {

std::string to_string(IndexScheme scheme) {
  return scheme == IndexScheme::linear ? "linear" : "dyadic";
}

IndexScheme parse_scheme(const std::string& text) {
  if (text == "linear") return IndexScheme::linear;
  if (text == "dyadic") return IndexScheme::dyadic;
  throw std::invalid_argument("unknown index scheme '" + text + "'");
}

DyadicIndex dyadic_index(std::size_t offset) {
  const std::size_t ell = offset + 1;
  const int k = std::bit_width(ell) - 1;
  return {k, ell - (std::size_t{1} << k) + 1};
}

std::size_t dyadic_offset(int k, std::size_t l) { return (std::size_t{1} << k) + l - 2; }

std::size_t dyadic_length(int max_level) { return (std::size_t{1} << (max_level + 1)) - 1; }

ScalingSpec ScalingSpec::linear(double p, double alpha, int d, std::size_t n, double lambda) {
  ScalingSpec s{p, alpha, d, lambda, IndexScheme::linear, n};
  s.validate();
  return s;
}

ScalingSpec ScalingSpec::dyadic(double p, double alpha, int max_level, double lambda) {
  if (max_level < 0) throw std::invalid_argument("dyadic max level must be >= 0");
  ScalingSpec s{p, alpha, 1, lambda, IndexScheme::dyadic, static_cast<std::size_t>(max_level)};
  s.validate();
  return s;
}

void ScalingSpec::validate() const {
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("scaling spec: need 1 <= p <= 2");
  if (!(alpha > 0.0)) throw std::invalid_argument("scaling spec: need alpha > 0");
  if (d < 1) throw std::invalid_argument("scaling spec: need d >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("scaling spec: need lambda > 0");
  }
  if (scheme == IndexScheme::linear && truncation < 1) {
    throw std::invalid_argument("scaling spec: need N >= 1");
  }
  if (scheme == IndexScheme::dyadic) {
    if (d != 1) throw std::invalid_argument("scaling spec: dyadic scheme is one-dimensional");
    if (truncation > 40) throw std::invalid_argument("scaling spec: dyadic level too large");
  }
}

std::size_t ScalingSpec::length() const {
  return scheme == IndexScheme::linear ? truncation : dyadic_length(static_cast<int>(truncation));
}

int ScalingSpec::max_level() const {
  if (scheme != IndexScheme::dyadic) throw std::logic_error("max_level on a linear spec");
  return static_cast<int>(truncation);
}

double ScalingSpec::gamma(std::size_t offset) const {
  if (scheme == IndexScheme::linear) {
    return lambda * std::pow(static_cast<double>(offset + 1), -0.5 - alpha / d);
  }
  const int k = dyadic_index(offset).k;
  return lambda * std::exp2(-(0.5 + alpha) * k);
}

std::vector<double> ScalingSpec::gammas() const {
  std::vector<double> g(length());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = gamma(i);
  return g;
}

ScalingSpec ScalingSpec::with_lambda(double new_lambda) const {
  ScalingSpec s = *this;
  s.lambda = new_lambda;
  s.validate();
  return s;
}

CoefVec::CoefVec(IndexScheme scheme, std::vector<double> values)
    : scheme_(scheme), values_(std::move(values)) {
  if (scheme_ == IndexScheme::dyadic) {
    const std::size_t n = values_.size() + 1;
    if (values_.empty() || (n & (n - 1)) != 0) {
      throw std::invalid_argument("dyadic coefficient vector must have 2^{K+1}-1 entries, got " +
                                  std::to_string(values_.size()));
    }
  }
}

CoefVec CoefVec::zeros(IndexScheme scheme, std::size_t length) {
  return CoefVec(scheme, std::vector<double>(length, 0.0));
}

int CoefVec::max_level() const {
  if (scheme_ != IndexScheme::dyadic) throw std::logic_error("max_level on a linear vector");
  return std::bit_width(values_.size() + 1) - 2;
}

double l2_norm(std::span<const double> u) {
  double s = 0.0;
  for (double v : u) s += v * v;
  return std::sqrt(s);
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double besov_norm(const CoefVec& u, const BesovParams& bp) {
  if (!(bp.q >= 1.0)) throw std::invalid_argument("besov_norm: need q >= 1");
  if (bp.d < 1) throw std::invalid_argument("besov_norm: need d >= 1");
  const auto v = u.values();
  if (std::isinf(bp.q)) {
    double m = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double ell = static_cast<double>(i + 1);
      m = std::max(m, std::pow(ell, bp.s / bp.d + 0.5) * std::abs(v[i]));
    }
    return m;
  }
  const double expo = bp.q * (bp.s / bp.d + 0.5) - 1.0;
  double s = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) continue;
    const double ell = static_cast<double>(i + 1);
    s += std::pow(ell, expo) * std::pow(std::abs(v[i]), bp.q);
  }
  return std::pow(s, 1.0 / bp.q);
}

namespace {

void check_same_shape(const CoefVec& h, const ScalingSpec& spec, const char* who) {
  if (h.scheme() != spec.scheme) {
    throw std::invalid_argument(std::string(who) + ": index scheme mismatch");
  }
  if (h.size() != spec.length()) {
    throw std::invalid_argument(std::string(who) + ": length mismatch (" +
                                std::to_string(h.size()) + " vs " +
                                std::to_string(spec.length()) + ")");
  }
}

}  // namespace

double z_norm_p(const CoefVec& h, const ScalingSpec& spec) {
  check_same_shape(h, spec, "z_norm_p");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] == 0.0) continue;
    s += std::pow(std::abs(h[i]) / spec.gamma(i), spec.p);
  }
  return s;
}

double q_norm(const CoefVec& h, const ScalingSpec& spec) {
  check_same_shape(h, spec, "q_norm");
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double r = h[i] / spec.gamma(i);
    s += r * r;
  }
  return std::sqrt(s);
}

namespace {

double truth_exponent(const BesovParams& bp, double delta, TruthProfile profile) {
  const double base = -bp.s / bp.d - 0.5 - delta;
  if (profile == TruthProfile::dense) return base;
  return std::isinf(bp.q) ? base : base + 1.0 / bp.q;
}

}  // namespace

CoefVec make_truth(const BesovParams& bp, double delta, std::size_t length, IndexScheme scheme,
                   TruthProfile profile, std::span<const int> signs) {
  if (!(delta > 0.0)) throw std::invalid_argument("make_truth: need delta > 0");
  if (length < 1) throw std::invalid_argument("make_truth: need length >= 1");
  if (!(bp.q >= 1.0)) throw std::invalid_argument("make_truth: need q >= 1");
  std::vector<double> w(length, 0.0);
  const double expo = truth_exponent(bp, delta, profile);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const std::size_t ell = i + 1;
    double position;
    if (scheme == IndexScheme::dyadic) {
      const DyadicIndex di = dyadic_index(i);
      if (profile == TruthProfile::lacunary && di.l != 1) continue;
      position = std::exp2(di.k);
    } else {
      if (profile == TruthProfile::lacunary && (ell & (ell - 1)) != 0) continue;
      position = static_cast<double>(ell);
    }
    int sign = (nonzero % 2 == 0) ? 1 : -1;
    if (!signs.empty()) sign = signs[nonzero % signs.size()] < 0 ? -1 : 1;
    w[i] = sign * std::pow(position, expo);
    ++nonzero;
  }
  return CoefVec(scheme, std::move(w));
}

double besov_tail_fraction(const BesovParams& bp, double delta, std::size_t length,
                           TruthProfile profile) {
  if (std::isinf(bp.q)) return 0.0;
  const double qd = bp.q * delta;
  if (profile == TruthProfile::lacunary) {
    // Terms 2^{-j q delta} at ell = 2^j; the first j beyond the truncation is
    // floor(log2 N) + 1.
    const int j_next = std::bit_width(length);
    return std::exp2(-qd * j_next);
  }
  // Terms ell^{-1 - q delta}: partial sum directly, tail by Euler-Maclaurin.
  double partial = 0.0;
  for (std::size_t ell = 1; ell <= length; ++ell) partial += std::pow(double(ell), -1.0 - qd);
  const double n = static_cast<double>(length);
  const double tail = std::pow(n, -qd) / qd - 0.5 * std::pow(n, -1.0 - qd);
  return tail / (partial + tail);
}

bool embedding_check(const BesovParams& bp) {
  const double q_term = std::isinf(bp.q) ? 0.0 : bp.d / bp.q;
  return bp.s > q_term - bp.d / 2.0;
}

void write_csv(std::ostream& out, const CoefVec& u) {
  out << "scheme,k,l,ell,value\n";
  const std::string name = to_string(u.scheme());
  std::ostringstream line;
  line << std::setprecision(17);
  for (std::size_t i = 0; i < u.size(); ++i) {
    line.str("");
    if (u.scheme() == IndexScheme::dyadic) {
      const DyadicIndex di = dyadic_index(i);
      line << name << ',' << di.k << ',' << di.l << ',' << i + 1 << ',' << u[i] << '\n';
    } else {
      line << name << ",,," << i + 1 << ',' << u[i] << '\n';
    }
    out << line.str();
  }
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

CoefVec read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("coefficient CSV: empty input");
  if (split_fields(line) != std::vector<std::string>{"scheme", "k", "l", "ell", "value"}) {
    throw std::runtime_error("coefficient CSV: unexpected header '" + line + "'");
  }
  std::vector<std::pair<std::size_t, double>> rows;
  std::string scheme_name;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto f = split_fields(line);
    if (f.size() != 5) {
      throw std::runtime_error("coefficient CSV: line " + std::to_string(lineno) +
                               " has " + std::to_string(f.size()) + " fields");
    }
    if (scheme_name.empty()) scheme_name = f[0];
    if (f[0] != scheme_name) throw std::runtime_error("coefficient CSV: mixed schemes");
    const std::size_t ell = std::stoull(f[3]);
    if (ell < 1) throw std::runtime_error("coefficient CSV: ell must be >= 1");
    if (scheme_name == "dyadic" && !f[1].empty()) {
      const int k = std::stoi(f[1]);
      const std::size_t l = std::stoull(f[2]);
      if (dyadic_offset(k, l) + 1 != ell) {
        throw std::runtime_error("coefficient CSV: (k,l) inconsistent with ell on line " +
                                 std::to_string(lineno));
      }
    }
    rows.emplace_back(ell, std::stod(f[4]));
  }
  if (rows.empty()) throw std::runtime_error("coefficient CSV: no rows");
  std::size_t n = 0;
  for (const auto& r : rows) n = std::max(n, r.first);
  std::vector<double> values(n, 0.0);
  for (const auto& [ell, v] : rows) values[ell - 1] = v;
  return CoefVec(parse_scheme(scheme_name), std::move(values));
}

void write_csv_file(const std::string& path, const CoefVec& u) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_csv(out, u);
}

CoefVec read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return read_csv(in);
}

}  // namespace pexp
