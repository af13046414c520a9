#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <optional>
#include <string>
#include <string_view>

namespace intervalrisk {

/// UTC instant with microsecond resolution, rendered as ISO-8601
/// ("2020-01-01T00:00:00.000000Z").
struct Timestamp {
    std::int64_t micros = 0;  // since 1970-01-01T00:00:00Z

    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

    static Timestamp now() {
        using namespace std::chrono;
        return {duration_cast<microseconds>(system_clock::now().time_since_epoch()).count()};
    }

    std::string to_iso8601() const {
        std::int64_t secs = micros / 1'000'000;
        std::int64_t frac = micros % 1'000'000;
        if (frac < 0) {
            frac += 1'000'000;
            secs -= 1;
        }
        const std::time_t tt = static_cast<std::time_t>(secs);
        std::tm tm{};
        gmtime_r(&tt, &tm);
        char buf[96];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%06lldZ", tm.tm_year + 1900,
                      tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec,
                      static_cast<long long>(frac));
        return buf;
    }

    /// Accepts "YYYY-MM-DDTHH:MM:SS[.fraction][Z|+HH:MM|-HH:MM]".
    static std::optional<Timestamp> parse(std::string_view s) {
        auto digits = [&](std::size_t pos, std::size_t n) -> std::optional<int> {
            if (pos + n > s.size()) return std::nullopt;
            int v = 0;
            for (std::size_t i = pos; i < pos + n; ++i) {
                if (s[i] < '0' || s[i] > '9') return std::nullopt;
                v = v * 10 + (s[i] - '0');
            }
            return v;
        };
        if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
            s[13] != ':' || s[16] != ':')
            return std::nullopt;
        auto y = digits(0, 4), mo = digits(5, 2), d = digits(8, 2);
        auto h = digits(11, 2), mi = digits(14, 2), se = digits(17, 2);
        if (!y || !mo || !d || !h || !mi || !se) return std::nullopt;
        if (*mo < 1 || *mo > 12 || *d < 1 || *d > 31 || *h > 23 || *mi > 59 || *se > 60)
            return std::nullopt;

        std::size_t pos = 19;
        std::int64_t frac = 0;
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            int n = 0;
            while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
                if (n < 6) frac = frac * 10 + (s[pos] - '0');
                ++n;
                ++pos;
            }
            if (n == 0) return std::nullopt;
            for (int i = n; i < 6; ++i) frac *= 10;
        }
        std::int64_t offset_secs = 0;
        if (pos < s.size()) {
            if (s[pos] == 'Z' && pos + 1 == s.size()) {
                ++pos;
            } else if ((s[pos] == '+' || s[pos] == '-') && pos + 6 == s.size() && s[pos + 3] == ':') {
                auto oh = digits(pos + 1, 2), om = digits(pos + 4, 2);
                if (!oh || !om) return std::nullopt;
                offset_secs = (*oh * 3600 + *om * 60) * (s[pos] == '+' ? 1 : -1);
                pos += 6;
            } else {
                return std::nullopt;
            }
        }

        using namespace std::chrono;
        const year_month_day ymd{year{*y}, month{static_cast<unsigned>(*mo)},
                                 day{static_cast<unsigned>(*d)}};
        if (!ymd.ok()) return std::nullopt;
        const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
        const std::int64_t secs = days * 86400 + *h * 3600 + *mi * 60 + *se - offset_secs;
        return Timestamp{secs * 1'000'000 + frac};
    }
};

}  // namespace intervalrisk
