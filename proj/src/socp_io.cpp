// Text serialization of CanonicalSocp.
//
//   # flowdesign canonical-socp v1
//   vars <n>
//   cones <N>
//   hyperbolic <n_r>
//   f <n values>
//   bounds
//   <lower> <upper>            (n lines, "inf" for no cap)
//   cone <index> <rows>        (one stanza per cone, index from 1)
//   P
//   <row-major, one line per row>
//   q <rows values>
//   r <n values>
//   s <value>
//   end
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "flowdesign/design.hpp"
#include "flowdesign/errors.hpp"

namespace flowdesign {

namespace {

void put_row(std::ostream& os, std::string_view tag, const Eigen::VectorXd& v) {
  if (!tag.empty()) os << tag;
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i == 0 && tag.empty() ? "" : " ") << fmt::format("{:.17g}", v[i]);
  os << '\n';
}

class LineReader {
 public:
  explicit LineReader(std::istream& is) : is_(is) {}

  std::istringstream next(std::string_view expect_tag) {
    std::string line;
    while (std::getline(is_, line)) {
      ++lineno_;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ss(line);
      if (!expect_tag.empty()) {
        std::string tag;
        ss >> tag;
        if (tag != expect_tag) fail(fmt::format("expected '{}', got '{}'", expect_tag, tag));
      }
      return ss;
    }
    fail(fmt::format("unexpected end of input, expected '{}'", expect_tag));
  }

  Eigen::VectorXd values(std::istringstream& ss, Eigen::Index n) {
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::string tok;
      if (!(ss >> tok)) fail(fmt::format("expected {} values", n));
      try {
        v[i] = std::stod(tok);
      } catch (const std::exception&) {
        fail(fmt::format("bad number '{}'", tok));
      }
    }
    return v;
  }

  template <class T>
  T scalar(std::istringstream& ss) {
    T v{};
    if (!(ss >> v)) fail("expected a value");
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(fmt::format("socp line {}", lineno_), what);
  }

 private:
  std::istream& is_;
  int lineno_ = 0;
};

}  // namespace

void write_socp(std::ostream& os, const CanonicalSocp& socp) {
  const auto n = static_cast<Eigen::Index>(socp.n_vars());
  os << "# flowdesign canonical-socp v1\n";
  os << "# x = (theta, xi_1..xi_n_o); minimize f'x s.t. ||P x + q|| <= r'x + s\n";
  os << "vars " << n << '\n';
  os << "cones " << socp.cones.size() << '\n';
  os << "hyperbolic " << socp.n_hyperbolic << '\n';
  put_row(os, "f", socp.f);
  os << "bounds\n";
  for (Eigen::Index j = 0; j < n; ++j) os << fmt::format("{:.17g} {:.17g}\n", socp.lower[j], socp.upper[j]);
  for (std::size_t c = 0; c < socp.cones.size(); ++c) {
    const SocpCone& cone = socp.cones[c];
    os << "cone " << (c + 1) << ' ' << cone.P.rows() << '\n';
    os << "P\n";
    for (Eigen::Index r = 0; r < cone.P.rows(); ++r) put_row(os, "", cone.P.row(r).transpose());
    put_row(os, "q", cone.q);
    put_row(os, "r", cone.r);
    os << fmt::format("s {:.17g}\n", cone.s);
  }
  os << "end\n";
}

CanonicalSocp read_socp(std::istream& is) {
  LineReader in(is);
  CanonicalSocp out;
  auto ss = in.next("vars");
  const auto n = in.scalar<Eigen::Index>(ss);
  ss = in.next("cones");
  const auto n_cones = in.scalar<std::size_t>(ss);
  ss = in.next("hyperbolic");
  out.n_hyperbolic = in.scalar<std::size_t>(ss);
  ss = in.next("f");
  out.f = in.values(ss, n);
  in.next("bounds");
  out.lower.resize(n);
  out.upper.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    ss = in.next("");
    const Eigen::VectorXd lu = in.values(ss, 2);
    out.lower[j] = lu[0];
    out.upper[j] = lu[1];
  }
  for (std::size_t c = 0; c < n_cones; ++c) {
    ss = in.next("cone");
    const auto index = in.scalar<std::size_t>(ss);
    if (index != c + 1) in.fail(fmt::format("cone index {} out of order", index));
    const auto rows = in.scalar<Eigen::Index>(ss);
    SocpCone cone;
    in.next("P");
    cone.P.resize(rows, n);
    for (Eigen::Index r = 0; r < rows; ++r) {
      ss = in.next("");
      cone.P.row(r) = in.values(ss, n).transpose();
    }
    ss = in.next("q");
    cone.q = in.values(ss, rows);
    ss = in.next("r");
    cone.r = in.values(ss, n);
    ss = in.next("s");
    cone.s = in.values(ss, 1)[0];
    out.cones.push_back(std::move(cone));
  }
  in.next("end");
  return out;
}

}  // namespace flowdesign
