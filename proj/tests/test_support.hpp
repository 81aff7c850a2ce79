#pragma once

#include "eventcast/event_db.hpp"

#include <filesystem>
#include <string>

#include <unistd.h>

namespace ectest {

inline std::filesystem::path fixture(const std::string& rel) {
    return std::filesystem::path(EVENTCAST_FIXTURES) / rel;
}

/// Fresh, empty scratch directory unique to this process.
inline std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() /
             ("eventcast_" + name + "_" + std::to_string(static_cast<long>(::getpid())));
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

inline eventcast::EventDatabase reference_db() { return eventcast::load_database(fixture("reference_db")); }

/// The reference tables plus a 1 USD logistics coupon for country 01, which
/// together reproduce the worked reasoning example on 2025-03-23.
inline eventcast::EventDatabase worked_example_db() {
    auto db = reference_db();
    eventcast::IncentiveRule r{"01", "Logistics coupon", eventcast::Date(2025, 3, 20), eventcast::Date(2025, 3, 25),
                               "Shipping coupon: 1-10x5", "Min. threshold 1 USD"};
    db.incentives.push_back(r);
    return db;
}

inline const std::string kWorkedSummary =
    "Country code is 01; On the 1st day of the holiday; state-level holiday; Non-free shipping event; "
    "Campaign level 12; Minimum shipping threshold is 1; top sellers' subsidy + rebate; Demand surge";

} // namespace ectest
