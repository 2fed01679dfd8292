// Copyright 2026 The imz-registry Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Shared test helpers. The oracles here are deliberately written from the
// textbook definitions rather than by calling into the library.

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "imz/identity.hpp"
#include "imz/registry.hpp"
#include "imz/schedule.hpp"
#include "imz/time.hpp"

namespace fixtures {

// ---- Verhoeff, from the dihedral group D5 ---------------------------------
//
// Digits 0..4 are the rotations r^k, digits 5..9 the reflections s r^(k-5).
// The check permutation is the 10-cycle-free permutation
// (0 1 5 8 9 4 2 7)(3 6) applied i mod 8 times at position i.

inline int d5_mul(int a, int b) {
  bool ra = a < 5, rb = b < 5;
  int ka = a % 5, kb = b % 5;
  if (ra && rb) return (ka + kb) % 5;
  if (ra && !rb) return 5 + (ka + kb) % 5;
  if (!ra && rb) return 5 + ((ka - kb) % 5 + 5) % 5;
  return ((ka - kb) % 5 + 5) % 5;
}

inline int d5_inverse(int a) {
  for (int b = 0; b < 10; ++b) {
    if (d5_mul(a, b) == 0) return b;
  }
  return -1;
}

inline int sigma_pow(int x, int n) {
  static const std::array<int, 10> sigma{1, 5, 7, 6, 2, 8, 3, 0, 9, 4};
  for (int i = 0; i < n % 8; ++i) x = sigma[x];
  return x;
}

inline bool oracle_verhoeff_valid(const std::string& digits) {
  if (digits.empty()) return false;
  int c = 0;
  int pos = 0;
  for (auto it = digits.rbegin(); it != digits.rend(); ++it, ++pos) {
    if (*it < '0' || *it > '9') return false;
    c = d5_mul(c, sigma_pow(*it - '0', pos));
  }
  return c == 0;
}

/// All check digits that make payload+digit validate under the oracle.
inline std::vector<char> oracle_check_digits(const std::string& payload) {
  std::vector<char> out;
  for (char d = '0'; d <= '9'; ++d) {
    if (oracle_verhoeff_valid(payload + d)) out.push_back(d);
  }
  return out;
}

/// A valid UID whose payload encodes n (leading digit forced to 1..9).
inline imz::Uid make_uid(std::uint64_t n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%011llu", static_cast<unsigned long long>(n % 100000000000ULL));
  std::string payload = buf;
  if (payload[0] == '0') payload[0] = '1';
  auto digits = oracle_check_digits(payload);
  return imz::Uid::from_string(payload + digits.at(0));
}

inline std::string random_payload(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> lead(1, 9), digit(0, 9);
  std::string s(1, static_cast<char>('0' + lead(rng)));
  for (int i = 1; i < 11; ++i) s.push_back(static_cast<char>('0' + digit(rng)));
  return s;
}

// ---- dates --------------------------------------------------------------

inline imz::Date day(const char* text) { return imz::parse_date_or_throw(text, "test"); }
inline imz::Timestamp at(const char* text) {
  return imz::parse_timestamp_or_throw(text, "test");
}

// ---- schedule oracle ----------------------------------------------------

struct OracleRow {
  std::string vaccine;
  int dose;
  int offset;
  int grace;
};

/// Rows of data/schedule.default.json read with plain JSON access.
inline std::vector<OracleRow> default_rows() {
  std::ifstream in(std::string(IMZ_DATA_DIR) + "/schedule.default.json");
  auto j = nlohmann::json::parse(in);
  std::vector<OracleRow> rows;
  for (const auto& e : j.at("entries")) {
    rows.push_back({e.at("vaccine").get<std::string>(), e.at("dose").get<int>(),
                    e.at("offset_days").get<int>(), e.at("grace_days").get<int>()});
  }
  return rows;
}

inline int vaccine_rank(const std::string& v) {
  static const std::array<const char*, 6> order{"BCG", "OPV", "DPT", "HEPB", "MEASLES", "TT"};
  for (int i = 0; i < 6; ++i) {
    if (v == order[i]) return i;
  }
  return 99;
}

struct OracleDue {
  std::string key;  // "OPV-1"
  long due_day;     // days after dob
  bool overdue;
  friend bool operator==(const OracleDue&, const OracleDue&) = default;
};

/// Scans every row on its own: not given, due day reached -> DUE, past the
/// grace window -> OVERDUE. Sorted by (due day, vaccine rank, dose).
inline std::vector<OracleDue> oracle_next_due(const std::vector<OracleRow>& rows,
                                              const std::vector<std::string>& given,
                                              long as_of_day) {
  std::vector<std::tuple<long, int, int, OracleDue>> hits;
  for (const auto& r : rows) {
    std::string key = r.vaccine + "-" + std::to_string(r.dose);
    if (std::find(given.begin(), given.end(), key) != given.end()) continue;
    if (as_of_day < r.offset) continue;
    bool overdue = as_of_day > r.offset + r.grace;
    hits.emplace_back(r.offset, vaccine_rank(r.vaccine), r.dose,
                      OracleDue{key, r.offset, overdue});
  }
  std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) {
    return std::tie(std::get<0>(a), std::get<1>(a), std::get<2>(a)) <
           std::tie(std::get<0>(b), std::get<1>(b), std::get<2>(b));
  });
  std::vector<OracleDue> out;
  for (auto& h : hits) out.push_back(std::get<3>(h));
  return out;
}

inline std::vector<OracleDue> to_oracle(const std::vector<imz::DueDose>& due, imz::Date dob) {
  std::vector<OracleDue> out;
  for (const auto& d : due) {
    out.push_back({imz::to_string(d.key()), imz::days_between(dob, d.due_date),
                   d.status == imz::DoseStatus::Overdue});
  }
  return out;
}

// ---- registry records ---------------------------------------------------

inline imz::ChildRecord make_child(const imz::Uid& uid, imz::Date dob,
                                   const std::string& center = "C1",
                                   const std::string& zone = "Z1",
                                   const std::string& mobile = "+919800000001") {
  return imz::ChildRecord{uid,
                          "Child " + uid.str().substr(8),
                          "Asha Devi",
                          mobile,
                          make_uid(99000000000ULL),
                          dob,
                          imz::Sex::F,
                          "District Hospital",
                          zone,
                          center,
                          imz::start_of(dob) + std::chrono::hours(10)};
}

inline imz::VaccinationEvent make_event(const std::string& id, const imz::Uid& uid,
                                        imz::DoseKey key, imz::Date when,
                                        const std::string& center = "C1") {
  return imz::VaccinationEvent{id,     uid,         key.vaccine,
                               key.dose, when,      center,
                               "LOT-" + center,
                               imz::start_of(when) + std::chrono::hours(12)};
}

/// Every rule dose of the default schedule, each on its due date.
inline imz::DoseHistory full_history(imz::Date dob) {
  imz::DoseHistory h;
  for (const auto& e : imz::default_schedule().entries()) {
    if (e.offset_days <= 365) h.push_back({e.key(), imz::add_days(dob, e.offset_days)});
  }
  return h;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixtures
