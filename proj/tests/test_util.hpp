#pragma once

#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "bsde/driver.hpp"
#include "bsde/errors.hpp"

#define EXPECT_BSDE_ERROR(stmt, ec)                                                  \
    do {                                                                             \
        try {                                                                        \
            stmt;                                                                    \
            ADD_FAILURE() << "expected " << bsde::to_string(ec) << ", nothing thrown"; \
        } catch (const bsde::Error& e) {                                             \
            EXPECT_EQ(e.code(), ec) << e.what();                                     \
        }                                                                            \
    } while (0)

namespace testing_support {

// Driver from a plain function of (y, z), with the given flags and no conjugate.
inline bsde::Driver custom_driver(std::function<double(double, double)> g, bsde::FlagSet flags,
                                  std::string name = "custom") {
    bsde::Driver d;
    d.name = std::move(name);
    d.eval = [g](double, double y, double z) {
        double v = g(y, z);
        return std::isinf(v) ? bsde::ExtendedReal::infinity() : bsde::ExtendedReal(v);
    };
    d.flags = flags;
    return d;
}

}  // namespace testing_support
