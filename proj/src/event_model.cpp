#include "impact/event_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace impact {

namespace {

constexpr double kPriceTol = 1e-9;

constexpr std::array<std::string_view, kNumTypes> kTypeNames = {"MO0", "MOP", "CA0", "CAP", "LO0", "LOP"};

bool same_price(double a, double b) { return std::abs(a - b) <= kPriceTol; }

bool on_tick_grid(double price) { return std::abs(price - std::round(price)) <= kPriceTol; }

[[noreturn]] void reject(const BookUpdate& u, const std::string& why) {
  std::ostringstream os;
  os << "session " << u.session_id << " seq " << u.seq << " (" << to_string(u.action) << " "
     << to_string(u.side) << " @ " << u.price << "): " << why;
  throw ClassificationError(os.str());
}

}  // namespace

std::string_view to_string(EventType type) { return kTypeNames[index(type)]; }

std::optional<EventType> parse_event_type(std::string_view text) {
  for (std::size_t k = 0; k < kNumTypes; ++k) {
    if (kTypeNames[k] == text) return kAllTypes[k];
  }
  return std::nullopt;
}

std::string_view to_string(BookAction action) {
  switch (action) {
    case BookAction::Trade: return "trade";
    case BookAction::Insert: return "insert";
    case BookAction::Cancel: return "cancel";
  }
  return "?";
}

std::string_view to_string(BookSide side) { return side == BookSide::Bid ? "bid" : "ask"; }

std::optional<BookAction> parse_book_action(std::string_view text) {
  if (text == "trade") return BookAction::Trade;
  if (text == "insert") return BookAction::Insert;
  if (text == "cancel") return BookAction::Cancel;
  return std::nullopt;
}

std::optional<BookSide> parse_book_side(std::string_view text) {
  if (text == "bid") return BookSide::Bid;
  if (text == "ask") return BookSide::Ask;
  return std::nullopt;
}

SignedEvent Session::event(std::size_t k) const {
  return SignedEvent{id, t[k], pi[k], epsilon[k], gap[k], mid[k]};
}

void Session::push_back(const SignedEvent& event) {
  t.push_back(event.t);
  pi.push_back(event.pi);
  epsilon.push_back(static_cast<std::int8_t>(event.epsilon));
  gap.push_back(event.gap);
  mid.push_back(event.mid_before);
}

void Session::close_from_last_event() {
  if (pi.empty()) return;
  close_mid = mid.back() + epsilon.back() * gap.back();
}

std::size_t EventStream::total_events() const {
  std::size_t n = 0;
  for (const auto& s : sessions) n += s.size();
  return n;
}

std::size_t EventStream::shortest_session() const {
  if (sessions.empty()) return 0;
  std::size_t n = sessions.front().size();
  for (const auto& s : sessions) n = std::min(n, s.size());
  return n;
}

EventStream make_stream(std::string instrument, std::span<const SignedEvent> events, double tick_size) {
  EventStream stream;
  stream.instrument = std::move(instrument);
  stream.tick_size = tick_size;
  for (const auto& e : events) {
    if (stream.sessions.empty() || stream.sessions.back().id != e.session_id) {
      stream.sessions.emplace_back();
      stream.sessions.back().id = e.session_id;
    }
    stream.sessions.back().push_back(e);
  }
  for (auto& s : stream.sessions) s.close_from_last_event();
  return stream;
}

SignedEvent classify(const BookUpdate& u) {
  if (!(u.best_bid_before < u.best_ask_before)) reject(u, "non-positive spread before update");
  if (!(u.best_bid_after < u.best_ask_after)) reject(u, "non-positive spread after update");
  if (!(u.volume > 0.0)) reject(u, "volume must be strictly positive");
  if (!(u.outstanding_at_best > 0.0)) reject(u, "outstanding volume at best must be strictly positive");
  for (double p : {u.price, u.best_bid_before, u.best_ask_before, u.best_bid_after, u.best_ask_after,
                   u.second_best_same_side_before}) {
    if (!std::isfinite(p) || !on_tick_grid(p)) reject(u, "price not aligned to the tick grid");
  }

  const bool ask = u.side == BookSide::Ask;
  // +1 when "behind the best" means a higher price (ask side), -1 on the bid.
  const double behind = ask ? 1.0 : -1.0;
  const double same_before = ask ? u.best_ask_before : u.best_bid_before;
  const double same_after = ask ? u.best_ask_after : u.best_bid_after;
  const double opp_before = ask ? u.best_bid_before : u.best_ask_before;
  const double opp_after = ask ? u.best_bid_after : u.best_ask_after;
  if (!same_price(opp_before, opp_after)) reject(u, "update changed the opposite best quote");

  SignedEvent e;
  e.session_id = u.session_id;
  e.t = u.seq;
  e.mid_before = 0.5 * (u.best_bid_before + u.best_ask_before);

  switch (u.action) {
    case BookAction::Trade: {
      e.epsilon = ask ? 1 : -1;
      if (!same_price(u.price, same_before)) reject(u, "trade away from the best quote");
      if (u.volume >= u.outstanding_at_best) {
        if ((same_after - same_before) * behind <= kPriceTol) {
          reject(u, "trade volume reaches outstanding volume but best quote unchanged");
        }
        if ((u.second_best_same_side_before - same_before) * behind <= kPriceTol) {
          reject(u, "second best level is not behind the best");
        }
        if ((same_after - u.second_best_same_side_before) * behind < -kPriceTol) {
          reject(u, "new best quote lies between the removed level and the second best");
        }
        e.pi = EventType::MOP;
        e.gap = 0.5 * std::abs(same_after - same_before);
      } else {
        if (!same_price(same_after, same_before)) reject(u, "partial trade moved the best quote");
        e.pi = EventType::MO0;
        e.gap = 0.0;
      }
      break;
    }
    case BookAction::Insert: {
      e.epsilon = ask ? -1 : 1;
      const double improvement = (same_before - u.price) * behind;  // > 0 inside the spread
      if (std::abs(improvement) <= kPriceTol) {
        if (!same_price(same_after, same_before)) reject(u, "limit order at the best moved the quote");
        e.pi = EventType::LO0;
        e.gap = 0.0;
      } else if (improvement > 0.0) {
        if ((opp_before - u.price) * behind >= -kPriceTol) reject(u, "limit order crosses the spread");
        if (!same_price(same_after, u.price)) reject(u, "limit order inside the spread did not become the best");
        e.pi = EventType::LOP;
        e.gap = 0.5 * improvement;
      } else {
        reject(u, "limit order behind the best is outside the modeled depth");
      }
      break;
    }
    case BookAction::Cancel: {
      e.epsilon = ask ? 1 : -1;
      if (!same_price(u.price, same_before)) reject(u, "cancellation away from the best quote");
      if (u.volume > u.outstanding_at_best + kPriceTol) reject(u, "cancelled volume exceeds outstanding volume");
      if (u.volume >= u.outstanding_at_best - kPriceTol) {
        if (!same_price(same_after, u.second_best_same_side_before) ||
            (same_after - same_before) * behind <= kPriceTol) {
          reject(u, "complete cancellation must reveal the second best level");
        }
        e.pi = EventType::CAP;
        e.gap = 0.5 * std::abs(same_after - same_before);
      } else {
        if (!same_price(same_after, same_before)) reject(u, "partial cancellation moved the best quote");
        e.pi = EventType::CA0;
        e.gap = 0.0;
      }
      break;
    }
  }
  return e;
}

EventStream classify_feed(std::string instrument, std::span<const BookUpdate> updates) {
  std::map<std::int64_t, std::vector<const BookUpdate*>> by_session;
  for (const auto& u : updates) by_session[u.session_id].push_back(&u);

  std::vector<SignedEvent> events;
  events.reserve(updates.size());
  for (auto& [id, rows] : by_session) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const BookUpdate* a, const BookUpdate* b) { return a->seq < b->seq; });
    std::int64_t t = 0;
    for (const BookUpdate* u : rows) {
      SignedEvent e = classify(*u);
      e.t = t++;
      events.push_back(e);
    }
  }
  return make_stream(std::move(instrument), events);
}

ReturnSeries returns_of(const EventStream& stream, double tolerance) {
  ReturnSeries out;
  out.returns.reserve(stream.sessions.size());
  for (const auto& s : stream.sessions) {
    std::vector<double> r(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) {
      r[k] = s.price(k + 1) - s.price(k);
      const double expected = is_price_changing(s.pi[k]) ? s.epsilon[k] * s.gap[k] : 0.0;
      if (!(std::abs(r[k] - expected) <= tolerance)) {
        std::ostringstream os;
        os << "return " << r[k] << " differs from epsilon*gap " << expected;
        out.mismatches.push_back({s.id, s.t[k], os.str()});
      }
    }
    out.returns.push_back(std::move(r));
  }
  return out;
}

ValidationReport validate(const EventStream& stream, double tolerance) {
  ValidationReport report;
  auto flag = [&](std::int64_t session, std::int64_t t, std::string message) {
    report.violations.push_back({session, t, std::move(message)});
  };

  std::set<std::int64_t> seen;
  for (const auto& s : stream.sessions) {
    if (!seen.insert(s.id).second) flag(s.id, -1, "session id appears in more than one block");
    if (s.size() == 0) {
      flag(s.id, -1, "empty session");
      continue;
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
      const std::int64_t t = s.t[k];
      if (k > 0 && s.t[k] <= s.t[k - 1]) flag(s.id, t, "event time not strictly increasing");
      if (s.epsilon[k] != 1 && s.epsilon[k] != -1) flag(s.id, t, "sign must be +1 or -1");
      if (!std::isfinite(s.gap[k]) || !std::isfinite(s.mid[k])) {
        flag(s.id, t, "non-finite gap or mid");
        continue;
      }
      if (is_price_changing(s.pi[k])) {
        if (!(s.gap[k] > 0.0)) flag(s.id, t, "price-changing event must have a strictly positive gap");
      } else if (s.gap[k] != 0.0) {
        flag(s.id, t, "neutral event must have zero gap");
      }
      if (k + 1 < s.size()) {
        const double r = s.mid[k + 1] - s.mid[k];
        const double expected = is_price_changing(s.pi[k]) ? s.epsilon[k] * s.gap[k] : 0.0;
        if (!(std::abs(r - expected) <= tolerance)) flag(s.id, t, "mid change differs from epsilon*gap");
      }
    }
  }
  return report;
}

}  // namespace impact
