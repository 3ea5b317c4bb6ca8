#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "impact/errors.hpp"

namespace impact {

/// Six order-book event types. The `P` suffix marks events that move the
/// best quote on their side (and therefore the midquote).
enum class EventType : std::uint8_t { MO0 = 0, MOP = 1, CA0 = 2, CAP = 3, LO0 = 4, LOP = 5 };

inline constexpr std::size_t kNumTypes = 6;
inline constexpr std::size_t kNumPriceChanging = 3;

inline constexpr std::array<EventType, kNumTypes> kAllTypes = {
    EventType::MO0, EventType::MOP, EventType::CA0, EventType::CAP, EventType::LO0, EventType::LOP};
inline constexpr std::array<EventType, kNumPriceChanging> kPriceChanging = {
    EventType::MOP, EventType::CAP, EventType::LOP};
inline constexpr std::array<EventType, kNumPriceChanging> kNeutral = {
    EventType::MO0, EventType::CA0, EventType::LO0};

constexpr std::size_t index(EventType type) { return static_cast<std::size_t>(type); }

constexpr bool is_price_changing(EventType type) {
  return type == EventType::MOP || type == EventType::CAP || type == EventType::LOP;
}

/// Position of a price-changing type inside kPriceChanging.
constexpr std::size_t pc_index(EventType type) { return index(type) / 2; }

std::string_view to_string(EventType type);
std::optional<EventType> parse_event_type(std::string_view text);

enum class BookAction : std::uint8_t { Trade, Insert, Cancel };
enum class BookSide : std::uint8_t { Bid, Ask };

std::string_view to_string(BookAction action);
std::string_view to_string(BookSide side);
std::optional<BookAction> parse_book_action(std::string_view text);
std::optional<BookSide> parse_book_side(std::string_view text);

/// One raw update at the top of the book. `side` is the book side the update
/// touches: a buy market order trades against the ask, a buy limit order is
/// inserted on the bid. All prices are in ticks.
struct BookUpdate {
  std::int64_t session_id = 0;
  std::int64_t seq = 0;
  BookAction action = BookAction::Trade;
  BookSide side = BookSide::Ask;
  double price = 0.0;
  double volume = 0.0;
  double outstanding_at_best = 0.0;
  double best_bid_before = 0.0;
  double best_ask_before = 0.0;
  double best_bid_after = 0.0;
  double best_ask_after = 0.0;
  double second_best_same_side_before = 0.0;
};

/// A classified event. `gap` is in midquote ticks (half the same-side level
/// distance), so a price-changing event moves the mid by `epsilon * gap`.
struct SignedEvent {
  std::int64_t session_id = 0;
  std::int64_t t = 0;
  EventType pi = EventType::MO0;
  int epsilon = 1;
  double gap = 0.0;
  double mid_before = 0.0;
};

/// Columnar storage for one trading session.
///
/// `mid[k]` is the midquote just before event k; `close_mid` is the midquote
/// after the last event. For classified data `close_mid` is the last mid
/// moved by that event's `epsilon * gap`.
struct Session {
  std::int64_t id = 0;
  std::vector<std::int64_t> t;
  std::vector<EventType> pi;
  std::vector<std::int8_t> epsilon;
  std::vector<double> gap;
  std::vector<double> mid;
  double close_mid = 0.0;

  [[nodiscard]] std::size_t size() const { return pi.size(); }
  [[nodiscard]] SignedEvent event(std::size_t k) const;
  void push_back(const SignedEvent& event);
  /// Sets close_mid from the last event's jump.
  void close_from_last_event();
  /// Midquote before event k, with k == size() mapping to close_mid.
  [[nodiscard]] double price(std::size_t k) const { return k < mid.size() ? mid[k] : close_mid; }
};

struct EventStream {
  std::string instrument;
  double tick_size = 1.0;
  std::vector<Session> sessions;

  [[nodiscard]] std::size_t total_events() const;
  [[nodiscard]] std::size_t shortest_session() const;
};

/// Groups events (already ordered by session, then t) into a stream. Each
/// session's closing mid is derived from its last event.
EventStream make_stream(std::string instrument, std::span<const SignedEvent> events,
                        double tick_size = 1.0);

/// Classifies one book update into its signed event. Throws
/// ClassificationError when the update is inconsistent.
SignedEvent classify(const BookUpdate& update);

/// Classifies a whole feed: groups by session, orders by seq and assigns
/// event time as the position in that order.
EventStream classify_feed(std::string instrument, std::span<const BookUpdate> updates);

struct Violation {
  std::int64_t session_id = 0;
  std::int64_t t = 0;
  std::string message;
};

struct ReturnSeries {
  /// Per-session midquote returns r_t = mid(t+1) - mid(t).
  std::vector<std::vector<double>> returns;
  /// Events where r_t differs from epsilon * gap (or from 0 for neutral
  /// events) by more than the tolerance.
  std::vector<Violation> mismatches;
};

ReturnSeries returns_of(const EventStream& stream, double tolerance = 1e-9);

struct ValidationReport {
  std::vector<Violation> violations;
  [[nodiscard]] bool ok() const { return violations.empty(); }
};

ValidationReport validate(const EventStream& stream, double tolerance = 1e-9);

}  // namespace impact
