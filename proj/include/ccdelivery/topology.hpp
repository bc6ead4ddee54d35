/*
 * Copyright 2026 The ccdelivery Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ccdelivery/error.hpp"
#include "ccdelivery/random.hpp"

namespace ccdelivery {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(const Point& a, const Point& b) noexcept {
    return std::hypot(a.x - b.x, a.y - b.y);
}

/// Centers of the hexagonal cells hosting the helpers. Hexagons have
/// circumradius 1, so edge-sharing neighbours are sqrt(3) apart.
struct HelperLayout {
    std::vector<Point> positions;

    std::size_t count() const noexcept { return positions.size(); }
};

struct UserField {
    std::vector<Point> positions;
    std::size_t raw_count = 0;
    double disk_radius = 0.0;
    double density = 0.0;

    double expected_count() const noexcept {
        return density * std::numbers::pi * disk_radius * disk_radius;
    }
};

/// Radius-limited helper/user links. Users with no helper in range are
/// dropped; the remaining ones are renumbered 0..K-1 in field order.
class Connectivity {
public:
    Connectivity() = default;

    /// Builds connectivity from explicit per-user helper lists (0-based).
    /// Every user is kept, even one with an empty list.
    static Connectivity from_candidates(std::size_t helpers,
                                        const std::vector<std::vector<std::size_t>>& candidates) {
        Connectivity c;
        c.helpers_ = helpers;
        c.users_ = candidates.size();
        c.links_.assign(c.helpers_ * c.users_, 0);
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            c.reachable_.push_back(k);
            for (std::size_t i : candidates[k]) {
                if (i >= helpers) throw InvalidParameter("helper index out of range");
                c.links_[i * c.users_ + k] = 1;
            }
        }
        return c;
    }

    std::size_t helpers() const noexcept { return helpers_; }
    std::size_t users() const noexcept { return users_; }
    double radius() const noexcept { return radius_; }

    bool linked(std::size_t helper, std::size_t user) const noexcept {
        return links_[helper * users_ + user] != 0;
    }

    /// Helpers in range of a kept user, ascending.
    std::vector<std::size_t> candidates(std::size_t user) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < helpers_; ++i)
            if (linked(i, user)) out.push_back(i);
        return out;
    }

    /// Index into the originating UserField of each kept user.
    const std::vector<std::size_t>& reachable_users() const noexcept { return reachable_; }

    friend Connectivity connect(const HelperLayout&, const UserField&, double);

private:
    std::size_t helpers_ = 0;
    std::size_t users_ = 0;
    double radius_ = 0.0;
    std::vector<std::uint8_t> links_;  // helper-major, helpers_ x users_
    std::vector<std::size_t> reachable_;
};

/// K x E complex gains with exact zeros outside the link pattern.
struct ChannelMatrix {
    Eigen::MatrixXcd coefficients;

    std::complex<double> operator()(std::size_t user, std::size_t helper) const {
        return coefficients(static_cast<Eigen::Index>(user), static_cast<Eigen::Index>(helper));
    }
};

namespace detail {

struct Axial {
    int q = 0;
    int r = 0;
};

inline constexpr Axial kHexDirections[6] = {{1, 0}, {1, -1}, {0, -1}, {-1, 0}, {-1, 1}, {0, 1}};

}  // namespace detail

/// Compact cluster of `helpers` hexagon centers: the spiral walk of the
/// triangular lattice around the origin, shifted so the centroid is (0,0).
inline HelperLayout hex_layout(std::size_t helpers) {
    if (helpers == 0) throw InvalidParameter("hex_layout: helper count must be at least 1");

    std::vector<detail::Axial> cells{{0, 0}};
    for (int ring = 1; cells.size() < helpers; ++ring) {
        detail::Axial cell{detail::kHexDirections[4].q * ring, detail::kHexDirections[4].r * ring};
        for (int side = 0; side < 6 && cells.size() < helpers; ++side) {
            for (int step = 0; step < ring && cells.size() < helpers; ++step) {
                cells.push_back(cell);
                cell.q += detail::kHexDirections[side].q;
                cell.r += detail::kHexDirections[side].r;
            }
        }
    }

    const double sqrt3 = std::sqrt(3.0);
    HelperLayout layout;
    Point centroid;
    for (const auto& c : cells) {
        Point p{sqrt3 * (c.q + 0.5 * c.r), 1.5 * c.r};
        centroid.x += p.x;
        centroid.y += p.y;
        layout.positions.push_back(p);
    }
    centroid.x /= static_cast<double>(helpers);
    centroid.y /= static_cast<double>(helpers);
    for (auto& p : layout.positions) {
        p.x -= centroid.x;
        p.y -= centroid.y;
    }
    return layout;
}

/// Homogeneous Poisson point process of intensity `density` on the disk of
/// radius `disk_radius` centered at the origin.
inline UserField sample_users(double density, double disk_radius, Rng& rng) {
    if (!(density > 0.0) || !(disk_radius > 0.0))
        throw InvalidParameter("sample_users: density and disk radius must be positive");

    UserField field;
    field.density = density;
    field.disk_radius = disk_radius;
    std::poisson_distribution<std::size_t> count(field.expected_count());
    field.raw_count = count(rng);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    field.positions.reserve(field.raw_count);
    for (std::size_t k = 0; k < field.raw_count; ++k) {
        const double rho = disk_radius * std::sqrt(unit(rng));
        const double phi = 2.0 * std::numbers::pi * unit(rng);
        field.positions.push_back({rho * std::cos(phi), rho * std::sin(phi)});
    }
    return field;
}

inline Connectivity connect(const HelperLayout& layout, const UserField& users, double radius) {
    if (!(radius >= 0.0)) throw InvalidParameter("connect: radius must be nonnegative");

    const std::size_t helpers = layout.count();
    std::vector<std::vector<std::uint8_t>> columns;
    Connectivity c;
    c.helpers_ = helpers;
    c.radius_ = radius;
    for (std::size_t k = 0; k < users.positions.size(); ++k) {
        std::vector<std::uint8_t> column(helpers, 0);
        bool any = false;
        for (std::size_t i = 0; i < helpers; ++i) {
            if (distance(layout.positions[i], users.positions[k]) <= radius) {
                column[i] = 1;
                any = true;
            }
        }
        if (any) {
            c.reachable_.push_back(k);
            columns.push_back(std::move(column));
        }
    }
    c.users_ = columns.size();
    c.links_.assign(helpers * c.users_, 0);
    for (std::size_t k = 0; k < c.users_; ++k)
        for (std::size_t i = 0; i < helpers; ++i) c.links_[i * c.users_ + k] = columns[k][i];
    return c;
}

/// Unit-variance circularly-symmetric complex Gaussian gains on every link.
inline ChannelMatrix draw_channels(const Connectivity& conn, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
    ChannelMatrix h;
    h.coefficients = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(conn.users()),
                                            static_cast<Eigen::Index>(conn.helpers()));
    for (std::size_t k = 0; k < conn.users(); ++k) {
        for (std::size_t i = 0; i < conn.helpers(); ++i) {
            if (!conn.linked(i, k)) continue;
            std::complex<double> g;
            do {
                const double re = gauss(rng);
                g = {re, gauss(rng)};
            } while (g == std::complex<double>{});
            h.coefficients(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = g;
        }
    }
    return h;
}

/// Text dump, one record per line:
///   helper,<i>,<x>,<y>
///   user,<k>,<field index>,<x>,<y>
///   link,<i>,<k>
/// Indices are 1-based; coordinates carry 17 significant digits.
inline void dump_topology(std::ostream& out, const HelperLayout& layout, const UserField& users,
                          const Connectivity& conn) {
    char buf[128];
    for (std::size_t i = 0; i < layout.count(); ++i) {
        std::snprintf(buf, sizeof buf, "helper,%zu,%.17g,%.17g\n", i + 1, layout.positions[i].x,
                      layout.positions[i].y);
        out << buf;
    }
    const auto& kept = conn.reachable_users();
    for (std::size_t k = 0; k < kept.size(); ++k) {
        const Point& p = users.positions[kept[k]];
        std::snprintf(buf, sizeof buf, "user,%zu,%zu,%.17g,%.17g\n", k + 1, kept[k] + 1, p.x, p.y);
        out << buf;
    }
    for (std::size_t i = 0; i < conn.helpers(); ++i)
        for (std::size_t k = 0; k < conn.users(); ++k)
            if (conn.linked(i, k)) out << "link," << i + 1 << ',' << k + 1 << '\n';
}

}  // namespace ccdelivery
