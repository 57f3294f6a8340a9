#include "qsearch/channel.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace qsearch {

namespace {

void check_parameter(double value, const char* name) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  }
}

}  // namespace

ChannelFamily ChannelFamily::bsc(double nu) {
  check_parameter(nu, "bsc parameter");
  return {ChannelKind::Bsc, nu, {}};
}

ChannelFamily ChannelFamily::bec(double tau) {
  check_parameter(tau, "bec parameter");
  return {ChannelKind::Bec, tau, {}};
}

ChannelFamily ChannelFamily::z(double zeta) {
  check_parameter(zeta, "z parameter");
  return {ChannelKind::ZChannel, zeta, {}};
}

ChannelFamily ChannelFamily::constant_matrix(Eigen::MatrixXd rows) {
  if (rows.rows() != 2 || rows.cols() < 1) {
    throw std::invalid_argument("constant matrix must have 2 rows");
  }
  for (int x = 0; x < 2; ++x) {
    double sum = 0.0;
    for (int y = 0; y < rows.cols(); ++y) {
      if (rows(x, y) < 0.0) throw std::invalid_argument("constant matrix entry < 0");
      sum += rows(x, y);
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw std::invalid_argument("constant matrix row does not sum to 1");
    }
  }
  ChannelFamily f;
  f.kind = ChannelKind::Constant;
  f.constant = std::move(rows);
  return f;
}

int ChannelFamily::output_size() const {
  switch (kind) {
    case ChannelKind::Bsc:
    case ChannelKind::ZChannel:
      return 2;
    case ChannelKind::Bec:
      return 3;
    case ChannelKind::Constant:
      return static_cast<int>(constant.cols());
  }
  return 0;
}

std::string ChannelFamily::describe() const {
  std::ostringstream os;
  switch (kind) {
    case ChannelKind::Bsc: os << "bsc:" << parameter; break;
    case ChannelKind::Bec: os << "bec:" << parameter; break;
    case ChannelKind::ZChannel: os << "z:" << parameter; break;
    case ChannelKind::Constant: os << "const[" << constant.cols() << "]"; break;
  }
  return os.str();
}

ChannelMatrix matrix_at(const ChannelFamily& family, double q) {
  if (std::isnan(q) || q < 0.0 || q > 1.0) {
    throw std::invalid_argument("query size must lie in [0,1]");
  }
  ChannelMatrix m;
  m.query_size = q;
  switch (family.kind) {
    case ChannelKind::Bsc: {
      const double e = family.parameter * q;
      m.p.resize(2, 2);
      m.p << 1.0 - e, e,
             e, 1.0 - e;
      break;
    }
    case ChannelKind::Bec: {
      const double e = family.parameter * q;
      m.p.resize(2, 3);
      m.p << 1.0 - e, 0.0, e,
             0.0, 1.0 - e, e;
      break;
    }
    case ChannelKind::ZChannel: {
      const double e = family.parameter * q;
      m.p.resize(2, 2);
      m.p << 1.0, 0.0,
             e, 1.0 - e;
      break;
    }
    case ChannelKind::Constant:
      m.p = family.constant;
      break;
  }
  return m;
}

double continuity_constant(const ChannelFamily& family, double q, double xi0) {
  if (family.kind == ChannelKind::Constant) return 0.0;
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("continuity certificate needs 0 < q < 1");
  if (!(xi0 > 0.0 && xi0 < std::min(q, 1.0 - q))) {
    throw std::invalid_argument("window must satisfy 0 < xi0 < min(q, 1-q)");
  }
  const double a = family.parameter;
  if (a == 0.0) return 0.0;  // law independent of q
  // Entries are a*q' and 1 - a*q'; |d/dq' log| equals 1/q' and a/(1 - a*q').
  const double lo = q - xi0;
  const double hi = q + xi0;
  if (1.0 - a * hi <= 0.0) {
    throw std::domain_error("transition probability reaches zero inside the window");
  }
  return std::max(1.0 / lo, a / (1.0 - a * hi));
}

ChannelFamily load_constant_family(std::istream& in) {
  int rows = 0, cols = 0;
  if (!(in >> rows >> cols) || rows != 2 || cols < 1) {
    throw std::runtime_error("constant matrix header must be \"2 |Y|\"");
  }
  Eigen::MatrixXd m(2, cols);
  for (int x = 0; x < 2; ++x) {
    for (int y = 0; y < cols; ++y) {
      if (!(in >> m(x, y))) throw std::runtime_error("constant matrix: missing entries");
    }
  }
  return ChannelFamily::constant_matrix(std::move(m));
}

ChannelFamily load_constant_family_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open channel file: " + path);
  return load_constant_family(in);
}

ChannelFamily parse_family(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("family must be kind:value, got " + text);
  const std::string kind = text.substr(0, colon);
  const std::string rest = text.substr(colon + 1);
  if (kind == "const") return load_constant_family_file(rest);
  double value = 0.0;
  try {
    value = std::stod(rest);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad family parameter: " + rest);
  }
  if (kind == "bsc") return ChannelFamily::bsc(value);
  if (kind == "bec") return ChannelFamily::bec(value);
  if (kind == "z") return ChannelFamily::z(value);
  throw std::invalid_argument("unknown channel kind: " + kind);
}

}  // namespace qsearch
