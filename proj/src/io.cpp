// SPDX-License-Identifier: Apache-2.0

#include "jumplan/io.hpp"

#include <fstream>
#include <sstream>

namespace jumplan {

using nlohmann::json;

namespace {

Scalar scalar_from_json(const json& j) {
  if (j.is_number_integer()) return Scalar(mpz_class(j.get<long>()));
  if (j.is_string()) return parse_scalar(j.get<std::string>());
  throw ParseError("expected an expression string, got: " + j.dump());
}

json scalar_to_json(const Scalar& s) { return s.to_expression(); }

RealMatrix positions_to_matrix(const std::vector<RealVector>& pos, size_t d) {
  RealMatrix m(d, pos.size());
  for (size_t j = 0; j < pos.size(); ++j)
    for (size_t i = 0; i < d; ++i) m.at(i, j) = pos[j][i];
  return m;
}

std::vector<RealVector> parse_point_list(const json& j, size_t d) {
  if (!j.is_array()) throw ParseError("expected an array of points");
  std::vector<RealVector> out;
  for (const auto& pt : j) {
    if (!pt.is_array() || pt.size() != d)
      throw ParseError("each point must be an array of " + std::to_string(d) +
                       " expressions");
    RealVector v(d);
    for (size_t i = 0; i < d; ++i) v[i] = scalar_from_json(pt[i]);
    out.push_back(std::move(v));
  }
  return out;
}

json point_list_to_json(const RealMatrix& m) {
  json out = json::array();
  for (size_t j = 0; j < m.cols; ++j) {
    json pt = json::array();
    for (size_t i = 0; i < m.rows; ++i) pt.push_back(scalar_to_json(m.at(i, j)));
    out.push_back(std::move(pt));
  }
  return out;
}

json int_vec_to_json(const IntVec& v) {
  json out = json::array();
  for (const auto& x : v) out.push_back(x.get_str());
  return out;
}

IntVec int_vec_from_json(const json& j) {
  IntVec v;
  for (const auto& e : j) {
    if (e.is_number_integer()) {
      v.emplace_back(e.get<long>());
    } else {
      v.emplace_back(e.get<std::string>());
    }
  }
  return v;
}

}  // namespace

Instance instance_from_json(const json& j) {
  Instance inst;
  inst.d = j.at("d").get<size_t>();
  inst.n = j.at("n").get<size_t>();
  if (inst.d == 0) throw ParseError("instance: d must be positive");
  auto pos = parse_point_list(j.at("positions"), inst.d);
  if (pos.size() != inst.n + 1)
    throw ParseError("instance: expected n+1 = " + std::to_string(inst.n + 1) +
                     " positions, got " + std::to_string(pos.size()));
  inst.positions.dim = inst.d;
  inst.positions.pos = std::move(pos);
  if (j.contains("targets") && !j.at("targets").is_null()) {
    auto tg = parse_point_list(j.at("targets"), inst.d);
    if (tg.size() != inst.n + 1) throw ParseError("instance: need n+1 targets");
    inst.targets = positions_to_matrix(tg, inst.d);
  }
  if (j.contains("eps")) inst.eps = scalar_from_json(j.at("eps"));
  if (inst.eps.sign() <= 0) throw ParseError("instance: eps must be positive");
  if (j.contains("precision")) inst.precision = j.at("precision").get<long>();
  if (j.contains("seed")) inst.seed = j.at("seed").get<unsigned long>();
  if (j.contains("effort")) {
    const json& e = j.at("effort");
    if (e.contains("radius")) inst.effort.enum_radius = e.at("radius").get<long>();
    if (e.contains("attempts")) inst.effort.scale_attempts = e.at("attempts").get<int>();
    if (e.contains("wall_ms")) inst.effort.wall_ms = e.at("wall_ms").get<long>();
    if (e.contains("enum_budget")) inst.effort.enum_budget = e.at("enum_budget").get<long>();
    if (e.contains("move_budget")) inst.effort.move_budget = e.at("move_budget").get<long>();
  }
  inst.effort.precision_bits = inst.precision;
  return inst;
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open instance file: " + path);
  json j;
  in >> j;
  return instance_from_json(j);
}

RealMatrix relative_matrix(const Instance& inst) {
  RealMatrix P(inst.d, inst.n);
  const RealVector& p0 = inst.positions.pos[0];
  for (size_t j = 0; j < inst.n; ++j)
    for (size_t i = 0; i < inst.d; ++i)
      P.at(i, j) = inst.positions.pos[j + 1][i] - p0[i];
  return P;
}

IntMatrix int_matrix_from_json(const json& j) {
  const json& rows = j.is_object() ? j.at("matrix") : j;
  if (!rows.is_array() || rows.empty())
    throw ParseError("matrix: expected a non-empty array of rows");
  size_t r = rows.size(), c = rows[0].size();
  IntMatrix m(r, c);
  for (size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) throw ParseError("matrix: ragged rows");
    for (size_t k = 0; k < c; ++k) {
      const json& e = rows[i][k];
      m.at(i, k) = e.is_number_integer() ? mpz_class(e.get<long>())
                                         : mpz_class(e.get<std::string>());
    }
  }
  return m;
}

IntMatrix load_int_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open matrix file: " + path);
  json j;
  in >> j;
  return int_matrix_from_json(j);
}

json int_matrix_to_json(const IntMatrix& m) {
  json rows = json::array();
  for (size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (size_t k = 0; k < m.cols(); ++k) row.push_back(m.at(i, k).get_str());
    rows.push_back(std::move(row));
  }
  return rows;
}

json verdict_to_json(const DensityVerdict& v, long precision) {
  json j;
  switch (v.kind) {
    case DensityVerdict::Kind::Dense:
      j["verdict"] = "dense";
      break;
    case DensityVerdict::Kind::NotDense:
      j["verdict"] = "not_dense";
      break;
    case DensityVerdict::Kind::Unknown:
      j["verdict"] = "unknown";
      break;
  }
  j["note"] = v.note;
  if (v.kind == DensityVerdict::Kind::NotDense) {
    json w = json::array();
    for (const auto& wi : v.w)
      w.push_back(wi.form() ? json(wi.to_expression()) : json(wi.to_decimal(precision)));
    j["w"] = std::move(w);
    json wtp = json::array();
    for (const auto& s : v.wTP)
      wtp.push_back(s.form() ? json(s.to_expression()) : json(s.to_decimal(precision)));
    j["wTP"] = std::move(wtp);
    j["nearest_integers"] = int_vec_to_json(v.nearest_integers);
    j["residual_bound"] = v.exact ? json("0") : json(v.residual_bound.to_decimal(precision));
    j["exact"] = v.exact;
  }
  if (v.kind == DensityVerdict::Kind::Dense) {
    j["tolerance"] = v.tolerance.to_expression();
    json probes = json::array();
    for (const auto& p : v.probes) {
      json pe;
      json tgt = json::array();
      for (const auto& s : p.target) tgt.push_back(s.to_expression());
      pe["target"] = std::move(tgt);
      pe["v"] = int_vec_to_json(p.v);
      pe["distance"] = Scalar::sqrt(p.dist_sq).to_decimal(precision, 12);
      probes.push_back(std::move(pe));
    }
    j["probes"] = std::move(probes);
  }
  return j;
}

json step_list_to_json(const StepList& steps) {
  json out = json::array();
  for (const auto& s : steps) out.push_back(json::array({s.row, s.col, s.value}));
  return out;
}

StepList step_list_from_json(const json& j, int n) {
  StepList out;
  for (const auto& e : j) {
    StepDescriptor s;
    s.n = n;
    s.row = e.at(0).get<int>();
    s.col = e.at(1).get<int>();
    s.value = e.at(2).get<int>();
    out.push_back(s);
  }
  return out;
}

json certificate_to_json(const PlanCertificate& cert) {
  json j;
  j["A0"] = int_matrix_to_json(cert.A0);
  j["w0"] = int_vec_to_json(cert.w0);
  j["wprime"] = int_vec_to_json(cert.wprime);
  j["eps"] = cert.eps.to_expression();
  j["matrix_budget"] = cert.matrix_budget.to_expression();
  j["translation_budget"] = cert.translation_budget.to_expression();
  j["predicted"] = point_list_to_json(cert.predicted);
  if (cert.steps_tracked) j["a0_steps"] = step_list_to_json(cert.a0_steps);
  return j;
}

PlanCertificate certificate_from_json(const json& j) {
  PlanCertificate cert;
  cert.A0 = int_matrix_from_json(j.at("A0"));
  cert.w0 = int_vec_from_json(j.at("w0"));
  cert.wprime = int_vec_from_json(j.at("wprime"));
  cert.eps = scalar_from_json(j.at("eps"));
  cert.matrix_budget = scalar_from_json(j.at("matrix_budget"));
  cert.translation_budget = scalar_from_json(j.at("translation_budget"));
  size_t n = cert.A0.rows();
  const json& pred = j.at("predicted");
  size_t d = pred.empty() ? 0 : pred[0].size();
  cert.predicted = RealMatrix(d, pred.size());
  for (size_t c = 0; c < pred.size(); ++c)
    for (size_t i = 0; i < d; ++i)
      cert.predicted.at(i, c) = scalar_from_json(pred[c][i]);
  if (j.contains("a0_steps")) {
    cert.a0_steps = step_list_from_json(j.at("a0_steps"), static_cast<int>(n));
    cert.steps_tracked = true;
  }
  return cert;
}

void write_plan_file(const std::string& path, const Plan& plan, const Instance& inst) {
  json header;
  header["format"] = "jumplan-plan-v1";
  header["n"] = plan.n;
  header["d"] = plan.d;
  header["eps"] = plan.cert.eps.to_expression();
  header["precision"] = inst.precision;
  header["move_count"] = plan.moves.size();
  {
    json init = json::array();
    for (const auto& p : plan.initial.pos) {
      json pt = json::array();
      for (const auto& s : p) pt.push_back(s.to_expression());
      init.push_back(std::move(pt));
    }
    header["initial"] = std::move(init);
  }
  header["predicted_finals"] = point_list_to_json(plan.predicted);
  if (inst.targets) header["targets"] = point_list_to_json(*inst.targets);
  {
    json segs = json::array();
    for (const auto& seg : plan.segments) {
      json s;
      s["phase"] =
          seg.kind == PlanSegment::Kind::Stationary ? "stationary" : "translation";
      s["count"] = seg.count;
      if (seg.kind == PlanSegment::Kind::Translation) {
        s["j"] = seg.j;
        s["k"] = seg.k.get_str();
      }
      segs.push_back(std::move(s));
    }
    header["segments"] = std::move(segs);
  }
  header["certificate"] = certificate_to_json(plan.cert);

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write plan file: " + path);
  out << "{\"header\":" << header.dump() << ",\"moves\":[";
  for (size_t i = 0; i < plan.moves.size(); ++i) {
    if (i) out << ',';
    if (i % 64 == 0) out << '\n';
    out << "{\"jumper\":" << plan.moves[i].jumper << ",\"over\":" << plan.moves[i].over
        << "}";
  }
  out << "\n]}\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

// Minimal streaming scanner for the plan file layout produced above.
class PlanStream {
 public:
  explicit PlanStream(const std::string& path) : in_(path) {
    if (!in_) throw std::runtime_error("cannot open plan file: " + path);
  }

  // Reads the header object (balanced braces outside strings).
  json read_header() {
    expect('{');
    std::string key = read_string();
    if (key != "header") throw ParseError("plan file: expected \"header\" first");
    expect(':');
    std::string raw = read_balanced('{', '}');
    return json::parse(raw);
  }

  // Positions the stream at the first move; afterwards next_move yields
  // moves until the array ends.
  void begin_moves() {
    expect(',');
    std::string key = read_string();
    if (key != "moves") throw ParseError("plan file: expected \"moves\"");
    expect(':');
    expect('[');
  }

  bool next_move(Move& m) {
    skip_ws();
    int c = in_.peek();
    if (c == ',') {
      in_.get();
      skip_ws();
      c = in_.peek();
    }
    if (c == ']') {
      in_.get();
      return false;
    }
    std::string raw = read_balanced('{', '}');
    json j = json::parse(raw);
    m.jumper = j.at("jumper").get<int>();
    m.over = j.at("over").get<int>();
    return true;
  }

 private:
  std::ifstream in_;

  void skip_ws() {
    while (std::isspace(in_.peek())) in_.get();
  }
  void expect(char c) {
    skip_ws();
    int g = in_.get();
    if (g != c)
      throw ParseError(std::string("plan file: expected '") + c + "', got '" +
                       static_cast<char>(g) + "'");
  }
  std::string read_string() {
    expect('"');
    std::string s;
    for (;;) {
      int c = in_.get();
      if (c == EOF) throw ParseError("plan file: unterminated string");
      if (c == '\\') {
        s.push_back(static_cast<char>(c));
        s.push_back(static_cast<char>(in_.get()));
        continue;
      }
      if (c == '"') return s;
      s.push_back(static_cast<char>(c));
    }
  }
  std::string read_balanced(char open, char close) {
    skip_ws();
    if (in_.peek() != open) throw ParseError("plan file: expected object");
    std::string raw;
    int depth = 0;
    bool in_string = false;
    for (;;) {
      int c = in_.get();
      if (c == EOF) throw ParseError("plan file: unexpected end");
      raw.push_back(static_cast<char>(c));
      if (in_string) {
        if (c == '\\') raw.push_back(static_cast<char>(in_.get()));
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == open) ++depth;
      else if (c == close) {
        if (--depth == 0) return raw;
      }
    }
  }
};

}  // namespace

namespace {

PlanHeader plan_header_from_json(const json& h);

}  // namespace

PlanHeader read_plan_header(const std::string& path) {
  PlanStream ps(path);
  return plan_header_from_json(ps.read_header());
}

PlanHeader read_plan_file(const std::string& path,
                          const std::function<void(const Move&)>& on_move) {
  PlanStream ps(path);
  PlanHeader out = plan_header_from_json(ps.read_header());
  ps.begin_moves();
  Move m;
  size_t seen = 0;
  while (ps.next_move(m)) {
    ++seen;
    if (on_move) on_move(m);
  }
  if (seen != out.move_count)
    throw ParseError("plan file: move_count " + std::to_string(out.move_count) +
                     " does not match " + std::to_string(seen) + " moves");
  return out;
}

namespace {

PlanHeader plan_header_from_json(const json& h) {
  PlanHeader out;
  out.n = h.at("n").get<size_t>();
  out.d = h.at("d").get<size_t>();
  out.eps = scalar_from_json(h.at("eps"));
  if (h.contains("precision")) out.precision = h.at("precision").get<long>();
  out.move_count = h.at("move_count").get<size_t>();
  auto init = parse_point_list(h.at("initial"), out.d);
  if (init.size() != out.n + 1) throw ParseError("plan file: bad initial positions");
  out.initial.dim = out.d;
  out.initial.pos = std::move(init);
  {
    auto pred = parse_point_list(h.at("predicted_finals"), out.d);
    out.predicted = positions_to_matrix(pred, out.d);
  }
  if (h.contains("targets")) {
    auto tg = parse_point_list(h.at("targets"), out.d);
    out.targets = positions_to_matrix(tg, out.d);
  }
  out.cert = certificate_from_json(h.at("certificate"));
  for (const auto& s : h.at("segments")) {
    PlanSegment seg;
    seg.kind = s.at("phase").get<std::string>() == "stationary"
                   ? PlanSegment::Kind::Stationary
                   : PlanSegment::Kind::Translation;
    seg.count = s.at("count").get<size_t>();
    if (seg.kind == PlanSegment::Kind::Translation) {
      seg.j = s.at("j").get<int>();
      seg.k = mpz_class(s.at("k").get<std::string>());
    }
    out.segments.push_back(std::move(seg));
  }
  return out;
}

}  // namespace

// --- trajectory exports -----------------------------------------------------

struct CsvTrajectoryWriter::Impl {
  std::ofstream out;
  long precision;
  size_t digits;
};

CsvTrajectoryWriter::CsvTrajectoryWriter(const std::string& path,
                                         const Configuration& initial, long precision,
                                         size_t digits)
    : impl_(new Impl{std::ofstream(path), precision, digits}) {
  if (!impl_->out) throw std::runtime_error("cannot write trajectory file: " + path);
  impl_->out << "step,particle";
  for (size_t i = 0; i < initial.dim; ++i) impl_->out << ",x" << i;
  impl_->out << "\n";
  for (size_t p = 0; p < initial.particles(); ++p) {
    impl_->out << 0 << "," << p;
    for (size_t i = 0; i < initial.dim; ++i)
      impl_->out << "," << initial.pos[p][i].to_decimal(impl_->precision, impl_->digits);
    impl_->out << "\n";
  }
}

void CsvTrajectoryWriter::on_move(size_t step, const Move& m, const Configuration& c) {
  impl_->out << (step + 1) << "," << m.jumper;
  for (size_t i = 0; i < c.dim; ++i)
    impl_->out << "," << c.pos[m.jumper][i].to_decimal(impl_->precision, impl_->digits);
  impl_->out << "\n";
}

void CsvTrajectoryWriter::close() {
  if (impl_->out.is_open()) impl_->out.close();
}

CsvTrajectoryWriter::~CsvTrajectoryWriter() = default;

struct SvgTrajectoryWriter::Impl {
  long precision;
  std::vector<std::vector<std::pair<double, double>>> tracks;
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;

  void add(size_t particle, const RealVector& p) {
    double x = p[0].eval_interval(64).midpoint_double();
    double y = p[1].eval_interval(64).midpoint_double();
    tracks[particle].emplace_back(x, y);
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
};

SvgTrajectoryWriter::SvgTrajectoryWriter(const Configuration& initial, long precision)
    : impl_(new Impl) {
  if (initial.dim != 2)
    throw std::invalid_argument("svg export is only available for d = 2");
  impl_->precision = precision;
  impl_->tracks.resize(initial.particles());
  for (size_t p = 0; p < initial.particles(); ++p) impl_->add(p, initial.pos[p]);
}

void SvgTrajectoryWriter::on_move(size_t, const Move& m, const Configuration& c) {
  impl_->add(m.jumper, c.pos[m.jumper]);
}

void SvgTrajectoryWriter::write(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write svg file: " + path);
  const double pad = 1.0;
  double x0 = impl_->min_x - pad, x1 = impl_->max_x + pad;
  double y0 = impl_->min_y - pad, y1 = impl_->max_y + pad;
  double w = x1 - x0, h = y1 - y0;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                           "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << x0 << " " << -y1
      << " " << w << " " << h << "\" width=\"800\" height=\"" << 800.0 * h / w
      << "\">\n";
  for (size_t p = 0; p < impl_->tracks.size(); ++p) {
    const char* color = palette[p % 8];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
        << w / 800.0 << "\" points=\"";
    for (const auto& [x, y] : impl_->tracks[p]) out << x << "," << -y << " ";
    out << "\"/>\n";
    const auto& last = impl_->tracks[p].back();
    out << "<circle cx=\"" << last.first << "\" cy=\"" << -last.second << "\" r=\""
        << 3.0 * w / 800.0 << "\" fill=\"" << color << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace jumplan
