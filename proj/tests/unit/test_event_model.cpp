#include <gtest/gtest.h>

#include <random>

#include "impact/event_model.hpp"
#include "test_support.hpp"

using namespace impact;
using impact::fixtures::Ev;

namespace {

BookUpdate book(BookAction action, BookSide side, double price, double bid, double ask) {
  BookUpdate u;
  u.session_id = 1;
  u.seq = 0;
  u.action = action;
  u.side = side;
  u.price = price;
  u.volume = 1.0;
  u.outstanding_at_best = 5.0;
  u.best_bid_before = bid;
  u.best_ask_before = ask;
  u.best_bid_after = bid;
  u.best_ask_after = ask;
  u.second_best_same_side_before = side == BookSide::Ask ? ask + 1.0 : bid - 1.0;
  return u;
}

}  // namespace

TEST(Classify, SweepingBuyTradeIsMopWithHalfGap) {
  auto u = book(BookAction::Trade, BookSide::Ask, 101, 99, 101);
  u.volume = 10.0;
  u.outstanding_at_best = 10.0;
  u.second_best_same_side_before = 103;
  u.best_ask_after = 103;
  const auto e = classify(u);
  EXPECT_EQ(e.pi, EventType::MOP);
  EXPECT_EQ(e.epsilon, 1);
  EXPECT_DOUBLE_EQ(e.gap, 1.0);
  EXPECT_DOUBLE_EQ(e.mid_before, 100.0);
}

TEST(Classify, PartialBidCancellationIsCa0) {
  auto u = book(BookAction::Cancel, BookSide::Bid, 99, 99, 101);
  const auto e = classify(u);
  EXPECT_EQ(e.pi, EventType::CA0);
  EXPECT_EQ(e.epsilon, -1);
  EXPECT_EQ(e.gap, 0.0);
}

TEST(Classify, SellLimitInsideSpreadIsLop) {
  auto u = book(BookAction::Insert, BookSide::Ask, 101, 100, 103);
  u.best_ask_after = 101;
  const auto e = classify(u);
  EXPECT_EQ(e.pi, EventType::LOP);
  EXPECT_EQ(e.epsilon, -1);
  EXPECT_DOUBLE_EQ(e.gap, 1.0);
}

TEST(Classify, RemainingTypesAndSigns) {
  auto mo0 = book(BookAction::Trade, BookSide::Bid, 99, 99, 101);
  EXPECT_EQ(classify(mo0).pi, EventType::MO0);
  EXPECT_EQ(classify(mo0).epsilon, -1);

  auto lo0 = book(BookAction::Insert, BookSide::Bid, 99, 99, 101);
  EXPECT_EQ(classify(lo0).pi, EventType::LO0);
  EXPECT_EQ(classify(lo0).epsilon, 1);

  auto cap = book(BookAction::Cancel, BookSide::Ask, 101, 99, 101);
  cap.volume = cap.outstanding_at_best;
  cap.second_best_same_side_before = 104;
  cap.best_ask_after = 104;
  const auto e = classify(cap);
  EXPECT_EQ(e.pi, EventType::CAP);
  EXPECT_EQ(e.epsilon, 1);
  EXPECT_DOUBLE_EQ(e.gap, 1.5);
}

TEST(Classify, RejectsInconsistentUpdates) {
  auto sweep_no_move = book(BookAction::Trade, BookSide::Ask, 101, 99, 101);
  sweep_no_move.volume = 20.0;
  EXPECT_THROW(classify(sweep_no_move), ClassificationError);

  auto crossed = book(BookAction::Trade, BookSide::Ask, 101, 101, 101);
  EXPECT_THROW(classify(crossed), ClassificationError);

  auto off_grid = book(BookAction::Insert, BookSide::Bid, 99.5, 99, 101);
  EXPECT_THROW(classify(off_grid), ClassificationError);

  auto zero_volume = book(BookAction::Cancel, BookSide::Bid, 99, 99, 101);
  zero_volume.volume = 0.0;
  EXPECT_THROW(classify(zero_volume), ClassificationError);

  auto crossing_limit = book(BookAction::Insert, BookSide::Bid, 101, 99, 101);
  crossing_limit.best_bid_after = 101;
  EXPECT_THROW(classify(crossing_limit), ClassificationError);
}

TEST(Classify, FeedOrdersBySequenceWithinSessions) {
  auto a = book(BookAction::Insert, BookSide::Bid, 99, 99, 101);
  a.seq = 5;
  auto b = book(BookAction::Trade, BookSide::Ask, 101, 99, 101);
  b.seq = 2;
  auto c = book(BookAction::Cancel, BookSide::Ask, 101, 99, 101);
  c.session_id = 2;
  const std::vector<BookUpdate> feed = {a, b, c};
  const auto stream = classify_feed("X", feed);
  ASSERT_EQ(stream.sessions.size(), 2u);
  ASSERT_EQ(stream.sessions[0].size(), 2u);
  EXPECT_EQ(stream.sessions[0].pi[0], EventType::MO0);
  EXPECT_EQ(stream.sessions[0].pi[1], EventType::LO0);
  EXPECT_EQ(stream.sessions[0].t[0], 0);
  EXPECT_EQ(stream.sessions[0].t[1], 1);
  EXPECT_EQ(stream.sessions[1].pi[0], EventType::CA0);
}

TEST(Returns, NeutralOnlyStreamHasZeroReturns) {
  const auto st = fixtures::make_stream_of({{{EventType::MO0, 1, 0}, {EventType::CA0, -1, 0}, {EventType::LO0, 1, 0}}});
  const auto r = returns_of(st);
  EXPECT_TRUE(r.mismatches.empty());
  for (double v : r.returns[0]) EXPECT_EQ(v, 0.0);
}

TEST(Returns, SingleMopReturnsItsGap) {
  const auto st = fixtures::make_stream_of({{{EventType::MOP, 1, 0.5}}});
  const auto r = returns_of(st);
  ASSERT_EQ(r.returns[0].size(), 1u);
  EXPECT_DOUBLE_EQ(r.returns[0][0], 0.5);
}

TEST(Returns, HandBuiltSessionMatchesMidDifferences) {
  // mids: 100, 100, 100.5, 100.5, 99.5, 99.5, close 100
  Session s;
  s.id = 1;
  const std::vector<SignedEvent> evs = {
      {1, 0, EventType::LO0, 1, 0.0, 100.0},  {1, 1, EventType::MOP, 1, 0.5, 100.0},
      {1, 2, EventType::CA0, -1, 0.0, 100.5}, {1, 3, EventType::CAP, -1, 1.0, 100.5},
      {1, 4, EventType::MO0, -1, 0.0, 99.5},  {1, 5, EventType::LOP, 1, 0.5, 99.5}};
  for (const auto& e : evs) s.push_back(e);
  s.close_from_last_event();
  EventStream st;
  st.sessions.push_back(s);
  const auto r = returns_of(st);
  const std::vector<double> expected = {0.0, 0.5, 0.0, -1.0, 0.0, 0.5};
  ASSERT_TRUE(r.mismatches.empty());
  for (std::size_t k = 0; k < expected.size(); ++k) EXPECT_DOUBLE_EQ(r.returns[0][k], expected[k]);
}

TEST(Returns, MismatchReportedWithCoordinates) {
  auto st = fixtures::make_stream_of({{{EventType::MOP, 1, 0.5}, {EventType::MO0, 1, 0.0}}});
  st.sessions[0].mid[1] += 0.25;
  const auto r = returns_of(st);
  ASSERT_FALSE(r.mismatches.empty());
  EXPECT_EQ(r.mismatches[0].session_id, 1);
  EXPECT_EQ(r.mismatches[0].t, 0);
}

TEST(Validate, WellFormedStreamIsClean) {
  const auto st = fixtures::make_stream_of({{{EventType::MO0, 1, 0}, {EventType::MOP, -1, 0.5}, {EventType::LO0, 1, 0}}});
  EXPECT_TRUE(validate(st).ok());
}

TEST(Validate, NeutralEventWithGapFlagged) {
  auto st = fixtures::make_stream_of({{{EventType::MO0, 1, 0}, {EventType::MOP, -1, 0.5}, {EventType::LO0, 1, 0}}});
  st.sessions[0].gap[2] = 0.5;
  const auto report = validate(st);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].t, 2);
}

TEST(Validate, NonMonotoneTimeFlagged) {
  auto st = fixtures::make_stream_of({{{EventType::MO0, 1, 0}, {EventType::CA0, 1, 0}, {EventType::LO0, 1, 0}}});
  st.sessions[0].t[2] = 1;
  EXPECT_EQ(validate(st).violations.size(), 1u);
}

TEST(EventModelProperty, ReturnsTelescopeToSessionMidChange) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> type(0, 5);
  std::uniform_int_distribution<int> gap(1, 4);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<Ev> evs;
    for (int k = 0; k < 200; ++k) {
      const auto pi = static_cast<EventType>(type(rng));
      evs.push_back({pi, (rng() & 1) ? 1 : -1, is_price_changing(pi) ? 0.5 * gap(rng) : 0.0});
    }
    const auto st = fixtures::make_stream_of({evs});
    ASSERT_TRUE(validate(st).ok());
    const auto r = returns_of(st);
    double sum = 0.0;
    for (double v : r.returns[0]) sum += v;
    EXPECT_NEAR(sum, st.sessions[0].close_mid - st.sessions[0].mid[0], 1e-9);
    for (std::size_t k = 0; k < evs.size(); ++k) {
      EXPECT_EQ(st.sessions[0].gap[k] > 0.0, is_price_changing(st.sessions[0].pi[k]));
    }
  }
}

TEST(EventModel, TypeNamesRoundTrip) {
  for (EventType t : kAllTypes) EXPECT_EQ(parse_event_type(to_string(t)), t);
  EXPECT_FALSE(parse_event_type("MO1"));
  for (EventType t : kPriceChanging) EXPECT_TRUE(is_price_changing(t));
  for (EventType t : kNeutral) EXPECT_FALSE(is_price_changing(t));
}
