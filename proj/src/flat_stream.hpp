#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "impact/event_model.hpp"

namespace impact::detail {

// Contiguous copy of a stream for the lag kernels. Session s owns events
// [begin[s], begin[s+1]) and prices [begin[s] + s, begin[s+1] + s], the last
// one being the closing mid.
struct FlatStream {
  std::vector<std::uint8_t> type;
  std::vector<std::int8_t> sign;
  std::vector<double> ret;
  std::vector<double> price;
  std::vector<std::size_t> begin;

  explicit FlatStream(const EventStream& stream) {
    const std::size_t n = stream.total_events();
    type.reserve(n);
    sign.reserve(n);
    ret.reserve(n);
    price.reserve(n + stream.sessions.size());
    begin.reserve(stream.sessions.size() + 1);
    begin.push_back(0);
    for (const auto& s : stream.sessions) {
      for (std::size_t k = 0; k < s.size(); ++k) {
        type.push_back(static_cast<std::uint8_t>(s.pi[k]));
        sign.push_back(s.epsilon[k]);
        price.push_back(s.mid[k]);
        ret.push_back(s.price(k + 1) - s.mid[k]);
      }
      price.push_back(s.close_mid);
      begin.push_back(type.size());
    }
  }

  [[nodiscard]] std::size_t sessions() const { return begin.size() - 1; }
  [[nodiscard]] std::size_t length(std::size_t s) const { return begin[s + 1] - begin[s]; }
  [[nodiscard]] std::size_t price_begin(std::size_t s) const { return begin[s] + s; }
};

}  // namespace impact::detail
