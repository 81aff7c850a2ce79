#pragma once

#include "eventcast/error.hpp"

#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>

namespace eventcast {

/// Calendar date at day resolution, formatted as YYYY-MM-DD.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days days) : days_(days) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : days_(std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m},
                                            std::chrono::day{d}}) {}

    static Date parse(std::string_view text) {
        auto bad = [&] { return DataError("invalid date '" + std::string(text) + "', expected YYYY-MM-DD"); };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
        auto num = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            for (std::size_t i = pos; i < pos + len; ++i) {
                if (text[i] < '0' || text[i] > '9') throw bad();
                v = v * 10 + (text[i] - '0');
            }
            return v;
        };
        std::chrono::year_month_day ymd{std::chrono::year{num(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(num(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(num(8, 2))}};
        if (!ymd.ok()) throw bad();
        return Date(std::chrono::sys_days{ymd});
    }

    std::string str() const {
        std::chrono::year_month_day ymd{days_};
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
        return buf;
    }

    /// 0 = Monday ... 6 = Sunday.
    int weekday_index() const {
        return static_cast<int>(std::chrono::weekday{days_}.iso_encoding()) - 1;
    }

    std::string weekday_name() const {
        static constexpr const char* names[] = {"Monday", "Tuesday",  "Wednesday", "Thursday",
                                                "Friday", "Saturday", "Sunday"};
        return names[weekday_index()];
    }

    constexpr std::chrono::sys_days days() const { return days_; }
    constexpr long serial() const { return days_.time_since_epoch().count(); }

    constexpr Date operator+(long n) const { return Date(days_ + std::chrono::days{n}); }
    constexpr Date operator-(long n) const { return Date(days_ - std::chrono::days{n}); }
    constexpr long operator-(Date other) const { return (days_ - other.days_).count(); }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

} // namespace eventcast
