#include "impact/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

namespace impact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

class CsvReader {
 public:
  CsvReader(std::istream& is, std::string_view expected_header) : is_(is) {
    std::string header;
    if (!std::getline(is_, header)) throw Error("empty CSV input, expected header " + std::string(expected_header));
    strip_cr(header);
    if (header != expected_header) {
      throw Error("unexpected CSV header '" + header + "', expected '" + std::string(expected_header) + "'");
    }
    columns_ = split(std::string(expected_header)).size();
  }

  bool next() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      strip_cr(line);
      if (line.empty()) continue;
      fields_ = split(line);
      if (fields_.size() != columns_) fail("wrong number of fields");
      return true;
    }
    return false;
  }

  [[nodiscard]] const std::string& text(std::size_t k) const { return fields_[k]; }

  [[nodiscard]] double real(std::size_t k) const {
    try {
      return parse_double(fields_[k]);
    } catch (const Error& e) {
      fail(e.what());
    }
  }

  [[nodiscard]] std::int64_t integer(std::size_t k) const {
    std::int64_t v = 0;
    const auto& f = fields_[k];
    const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
    if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("invalid integer '" + f + "'");
    return v;
  }

  [[nodiscard]] EventType type(std::size_t k) const {
    const auto t = parse_event_type(fields_[k]);
    if (!t) fail("unknown event type '" + fields_[k] + "'");
    return *t;
  }

  [[noreturn]] void fail(const std::string& why) const {
    std::ostringstream os;
    os << "CSV line " << line_no_ + 1 << ": " << why;
    throw Error(os.str());
  }

 private:
  static void strip_cr(std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  }
  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
      const auto pos = line.find(',', start);
      out.push_back(line.substr(start, pos - start));
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    return out;
  }

  std::istream& is_;
  std::size_t columns_ = 0;
  std::size_t line_no_ = 0;
  std::vector<std::string> fields_;
};

void check_text_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos) throw Error("text field contains a separator: " + s);
}

std::string f(double v) { return format_double(v); }

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return {buf.data(), res.ptr};
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw Error("invalid number '" + std::string(text) + "'");
  }
  return v;
}

void write_events_csv(std::ostream& os, const EventStream& stream) {
  check_text_field(stream.instrument);
  os << "instrument,session_id,t,pi,epsilon,gap,mid_before\n";
  for (const auto& s : stream.sessions) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      os << stream.instrument << ',' << s.id << ',' << s.t[k] << ',' << to_string(s.pi[k]) << ','
         << static_cast<int>(s.epsilon[k]) << ',' << f(s.gap[k]) << ',' << f(s.mid[k]) << '\n';
    }
  }
}

EventStream read_events_csv(std::istream& is, double tick_size) {
  CsvReader csv(is, "instrument,session_id,t,pi,epsilon,gap,mid_before");
  std::vector<SignedEvent> events;
  std::string instrument;
  while (csv.next()) {
    if (events.empty()) {
      instrument = csv.text(0);
    } else if (csv.text(0) != instrument) {
      csv.fail("more than one instrument in an event file");
    }
    SignedEvent e;
    e.session_id = csv.integer(1);
    e.t = csv.integer(2);
    e.pi = csv.type(3);
    e.epsilon = static_cast<int>(csv.integer(4));
    if (e.epsilon != 1 && e.epsilon != -1) csv.fail("epsilon must be +1 or -1");
    e.gap = csv.real(5);
    e.mid_before = csv.real(6);
    events.push_back(e);
  }
  return make_stream(instrument, events, tick_size);
}

void write_book_updates_csv(std::ostream& os, const BookFeed& feed) {
  check_text_field(feed.instrument);
  os << "instrument,session_id,seq,action,side,price,volume,outstanding_at_best,best_bid_before,best_ask_before,"
        "best_bid_after,best_ask_after,second_best_same_side_before\n";
  for (const auto& u : feed.updates) {
    os << feed.instrument << ',' << u.session_id << ',' << u.seq << ',' << to_string(u.action) << ','
       << to_string(u.side) << ',' << f(u.price) << ',' << f(u.volume) << ',' << f(u.outstanding_at_best) << ','
       << f(u.best_bid_before) << ',' << f(u.best_ask_before) << ',' << f(u.best_bid_after) << ','
       << f(u.best_ask_after) << ',' << f(u.second_best_same_side_before) << '\n';
  }
}

BookFeed read_book_updates_csv(std::istream& is) {
  CsvReader csv(is,
                "instrument,session_id,seq,action,side,price,volume,outstanding_at_best,best_bid_before,"
                "best_ask_before,best_bid_after,best_ask_after,second_best_same_side_before");
  BookFeed feed;
  while (csv.next()) {
    if (feed.updates.empty()) {
      feed.instrument = csv.text(0);
    } else if (csv.text(0) != feed.instrument) {
      csv.fail("more than one instrument in a feed file");
    }
    BookUpdate u;
    u.session_id = csv.integer(1);
    u.seq = csv.integer(2);
    const auto action = parse_book_action(csv.text(3));
    if (!action) csv.fail("unknown action '" + csv.text(3) + "'");
    const auto side = parse_book_side(csv.text(4));
    if (!side) csv.fail("unknown side '" + csv.text(4) + "'");
    u.action = *action;
    u.side = *side;
    u.price = csv.real(5);
    u.volume = csv.real(6);
    u.outstanding_at_best = csv.real(7);
    u.best_bid_before = csv.real(8);
    u.best_ask_before = csv.real(9);
    u.best_bid_after = csv.real(10);
    u.best_ask_after = csv.real(11);
    u.second_best_same_side_before = csv.real(12);
    feed.updates.push_back(u);
  }
  return feed;
}

void write_stats_csv(std::ostream& os, const EventStats& stats) {
  os << "pi,count,P,delta_R\n";
  for (EventType t : kAllTypes) {
    os << to_string(t) << ',' << stats.counts[index(t)] << ',' << f(stats.prob(t)) << ',';
    if (is_price_changing(t) && stats.delta_R[pc_index(t)]) os << f(*stats.delta_R[pc_index(t)]);
    os << '\n';
  }
}

EventStats read_stats_csv(std::istream& is) {
  CsvReader csv(is, "pi,count,P,delta_R");
  EventStats stats;
  while (csv.next()) {
    const EventType t = csv.type(0);
    stats.counts[index(t)] = csv.integer(1);
    stats.P[index(t)] = csv.real(2);
    if (!csv.text(3).empty()) {
      if (!is_price_changing(t)) csv.fail("realized gap given for a neutral type");
      stats.delta_R[pc_index(t)] = csv.real(3);
    }
  }
  for (auto c : stats.counts) stats.total += c;
  return stats;
}

void write_curves_csv(std::ostream& os, const CorrelationSet& C, const ResponseSet& R, const ReturnResponseSet& S) {
  os << "kind,pi1,pi2,lag,value,count\n";
  auto pair_table = [&](const char* kind, const PairCurves& curves) {
    for (EventType a : kAllTypes) {
      for (EventType b : kAllTypes) {
        if (!C.present(a) || !C.present(b)) continue;
        for (std::size_t lag = 0; lag <= curves.max_lag(); ++lag) {
          os << kind << ',' << to_string(a) << ',' << to_string(b) << ',' << lag << ',' << f(curves.at(a, b, lag))
             << ',' << C.pair_counts[lag] << '\n';
        }
      }
    }
  };
  pair_table("C", C.C);
  if (C.has_pi()) pair_table("Pi", C.Pi);
  for (EventType a : kAllTypes) {
    if (!R.available(a)) continue;
    for (std::size_t lag = 1; lag <= R.grid.ell_max; ++lag) {
      os << "R," << to_string(a) << ",," << lag << ',' << f(R.at(a, lag)) << ',' << R.counts[index(a)] << '\n';
    }
  }
  for (EventType a : kAllTypes) {
    if (!S.available(a)) continue;
    for (EventType p : kPriceChanging) {
      for (std::size_t lag = 0; lag <= S.grid.ell_max; ++lag) {
        os << "S," << to_string(a) << ',' << to_string(p) << ',' << lag << ',' << f(S.at(a, p, lag)) << ','
           << S.counts[index(a)] << '\n';
      }
    }
  }
}

CurveBundle read_curves_csv(std::istream& is, const EventStats& stats) {
  struct Row {
    std::string kind;
    EventType a;
    std::optional<EventType> b;
    std::size_t lag;
    double value;
    std::int64_t count;
  };
  CsvReader csv(is, "kind,pi1,pi2,lag,value,count");
  std::vector<Row> rows;
  std::size_t c_lag = 0;
  std::size_t r_lag = 0;
  std::size_t s_lag = 0;
  bool have_pi = false;
  while (csv.next()) {
    Row row;
    row.kind = csv.text(0);
    row.a = csv.type(1);
    if (!csv.text(2).empty()) row.b = csv.type(2);
    const auto lag = csv.integer(3);
    if (lag < 0) csv.fail("negative lag");
    row.lag = static_cast<std::size_t>(lag);
    row.value = csv.real(4);
    row.count = csv.integer(5);
    if (row.kind == "C") {
      c_lag = std::max(c_lag, row.lag);
    } else if (row.kind == "Pi") {
      have_pi = true;
    } else if (row.kind == "R") {
      r_lag = std::max(r_lag, row.lag);
    } else if (row.kind == "S") {
      s_lag = std::max(s_lag, row.lag);
    } else {
      csv.fail("unknown curve kind '" + row.kind + "'");
    }
    if ((row.kind == "R") == row.b.has_value()) csv.fail("second type must be empty exactly for R rows");
    if (row.kind == "S" && !is_price_changing(*row.b)) csv.fail("S is stored for price-changing targets only");
    rows.push_back(std::move(row));
  }

  CurveBundle out;
  LagGrid grid;
  grid.ell_max = r_lag;
  out.C.grid = grid;
  out.C.P = stats.P;
  out.C.C = PairCurves(c_lag, kNaN);
  if (have_pi) out.C.Pi = PairCurves(c_lag, kNaN);
  out.C.pair_counts.assign(c_lag + 1, 0);
  out.R.grid = grid;
  for (auto& r : out.R.R) r.assign(r_lag + 1, kNaN);
  out.S.grid = grid;
  out.S.grid.ell_max = s_lag;
  for (auto& row : out.S.S) {
    for (auto& v : row) v.assign(s_lag + 1, kNaN);
  }
  for (const auto& row : rows) {
    if (row.kind == "C" || row.kind == "Pi") {
      auto& curves = row.kind == "C" ? out.C.C : out.C.Pi;
      if (row.lag > curves.max_lag()) throw Error("Pi rows extend beyond the C grid");
      curves.at(row.a, *row.b, row.lag) = row.value;
      out.C.pair_counts[row.lag] = row.count;
    } else if (row.kind == "R") {
      out.R.R[index(row.a)][row.lag] = row.value;
      out.R.R[index(row.a)][0] = 0.0;
      out.R.counts[index(row.a)] = row.count;
    } else {
      out.S.S[index(row.a)][pc_index(*row.b)][row.lag] = row.value;
      out.S.counts[index(row.a)] = row.count;
    }
  }
  return out;
}

void write_tim_kernels_csv(std::ostream& os, const TimKernels& kernels) {
  os << "pi,lag,G\n";
  for (EventType t : kAllTypes) {
    if (!kernels.active[index(t)]) continue;
    for (std::size_t lag = 1; lag <= kernels.length(); ++lag) {
      os << to_string(t) << ',' << lag << ',' << f(kernels.G[index(t)][lag]) << '\n';
    }
  }
}

TimKernels read_tim_kernels_csv(std::istream& is) {
  CsvReader csv(is, "pi,lag,G");
  std::map<std::size_t, std::map<std::size_t, double>> values;
  std::size_t L = 0;
  while (csv.next()) {
    const auto lag = csv.integer(1);
    if (lag < 1) csv.fail("propagator lags start at 1");
    values[index(csv.type(0))][static_cast<std::size_t>(lag)] = csv.real(2);
    L = std::max(L, static_cast<std::size_t>(lag));
  }
  std::array<std::vector<double>, kNumTypes> G;
  for (const auto& [type, curve] : values) {
    if (curve.size() != L) throw Error("propagator curves have different lengths");
    G[type].assign(L + 1, 0.0);
    for (const auto& [lag, v] : curve) G[type][lag] = v;
  }
  LagGrid grid;
  grid.ell_max = L;
  return TimKernels::from_G(grid, G);
}

void write_kappa_csv(std::ostream& os, const HdimKernels& kernels) {
  os << "pi1,pi2,lag,kappa\n";
  for (EventType a : kAllTypes) {
    for (EventType p : kPriceChanging) {
      for (std::size_t lag = 1; lag <= kernels.length(); ++lag) {
        os << to_string(a) << ',' << to_string(p) << ',' << lag << ',' << f(kernels.raw(a, p, lag)) << '\n';
      }
    }
  }
}

HdimKernels read_kappa_csv(std::istream& is, const std::array<double, kNumPriceChanging>& delta_R, double scale) {
  CsvReader csv(is, "pi1,pi2,lag,kappa");
  struct Entry {
    EventType a;
    EventType p;
    std::size_t lag;
    double v;
  };
  std::vector<Entry> entries;
  std::size_t L = 0;
  while (csv.next()) {
    const EventType p = csv.type(1);
    if (!is_price_changing(p)) csv.fail("kappa targets must be price-changing");
    const auto lag = csv.integer(2);
    if (lag < 1) csv.fail("kappa lags start at 1");
    entries.push_back({csv.type(0), p, static_cast<std::size_t>(lag), csv.real(3)});
    L = std::max(L, static_cast<std::size_t>(lag));
  }
  LagGrid grid;
  grid.ell_max = L;
  HdimKernels k = HdimKernels::zero(grid, delta_R);
  k.scale = scale;
  for (const auto& e : entries) k.kappa[index(e.a)][pc_index(e.p)][e.lag] = e.v;
  return k;
}

void write_delta_g_star_csv(std::ostream& os, const DeltaGStar& curves) {
  os << "pi,lag,dgstar\n";
  for (EventType t : kAllTypes) {
    const auto& c = curves.curve[index(t)];
    for (std::size_t lag = 1; lag < c.size(); ++lag) os << to_string(t) << ',' << lag << ',' << f(c[lag]) << '\n';
  }
}

DeltaGStar read_delta_g_star_csv(std::istream& is) {
  CsvReader csv(is, "pi,lag,dgstar");
  DeltaGStar out;
  std::size_t L = 0;
  std::vector<std::tuple<EventType, std::size_t, double>> rows;
  while (csv.next()) {
    const auto lag = csv.integer(1);
    if (lag < 1) csv.fail("lags start at 1");
    rows.emplace_back(csv.type(0), static_cast<std::size_t>(lag), csv.real(2));
    L = std::max(L, static_cast<std::size_t>(lag));
  }
  out.grid.ell_max = L;
  for (auto& c : out.curve) c.assign(L + 1, 0.0);
  for (const auto& [t, lag, v] : rows) out.curve[index(t)][lag] = v;
  return out;
}

void write_diffusion_csv(std::ostream& os, std::span<const DiffusionCurve> curves) {
  os << "lag,D,D_over_ell,provenance\n";
  for (const auto& c : curves) {
    for (std::size_t lag = 1; lag <= c.ell_max(); ++lag) {
      os << lag << ',' << f(c.at(lag)) << ',' << f(c.normalized(lag)) << ',' << to_string(c.provenance) << '\n';
    }
  }
}

std::vector<DiffusionCurve> read_diffusion_csv(std::istream& is) {
  CsvReader csv(is, "lag,D,D_over_ell,provenance");
  std::vector<DiffusionCurve> out;
  while (csv.next()) {
    const auto prov = parse_provenance(csv.text(3));
    if (!prov) csv.fail("unknown provenance '" + csv.text(3) + "'");
    const auto lag = csv.integer(0);
    if (out.empty() || out.back().provenance != *prov || lag == 1) {
      if (lag != 1) csv.fail("diffusion curve must start at lag 1");
      out.emplace_back();
      out.back().provenance = *prov;
      out.back().D.push_back(0.0);
    }
    if (static_cast<std::size_t>(lag) != out.back().D.size()) csv.fail("diffusion lags must be consecutive");
    out.back().D.push_back(csv.real(1));
  }
  return out;
}

void write_path_csv(std::ostream& os, const EventStream& path) {
  os << "session_id,t,pi,epsilon,gap,mid\n";
  for (const auto& s : path.sessions) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      os << s.id << ',' << s.t[k] << ',' << to_string(s.pi[k]) << ',' << static_cast<int>(s.epsilon[k]) << ','
         << f(s.gap[k]) << ',' << f(s.mid[k]) << '\n';
    }
  }
}

EventStream read_path_csv(std::istream& is) {
  CsvReader csv(is, "session_id,t,pi,epsilon,gap,mid");
  std::vector<SignedEvent> events;
  while (csv.next()) {
    SignedEvent e;
    e.session_id = csv.integer(0);
    e.t = csv.integer(1);
    e.pi = csv.type(2);
    e.epsilon = static_cast<int>(csv.integer(3));
    if (e.epsilon != 1 && e.epsilon != -1) csv.fail("epsilon must be +1 or -1");
    e.gap = csv.real(4);
    e.mid_before = csv.real(5);
    events.push_back(e);
  }
  return make_stream("", events);
}

}  // namespace impact
