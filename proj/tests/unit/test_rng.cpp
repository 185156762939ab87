#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "oracles/oracles.hpp"
#include "sfs/rng.hpp"

using namespace sfs;

TEST_SUITE("rng")
{
    TEST_CASE("philox known answers")
    {
        auto check = [](Philox4x32::Counter ctr, Philox4x32::Key key, unsigned const* want) {
            auto const got = Philox4x32::generate(ctr, key);
            for (int i = 0; i < 4; ++i)
            {
                CHECK(got[i] == want[i]);
            }
        };
        check({0, 0, 0, 0}, {0, 0}, oracle::kPhiloxZeroOut);
        check({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}, oracle::kPhiloxOnesOut);
        auto const* c = oracle::kPhiloxPiCtr;
        check({c[0], c[1], c[2], c[3]}, {oracle::kPhiloxPiKey[0], oracle::kPhiloxPiKey[1]}, oracle::kPhiloxPiOut);
    }

    TEST_CASE("run seeds are distinct and reproducible")
    {
        std::set<std::uint64_t> seen;
        for (std::uint64_t i = 0; i < 10000; ++i)
        {
            seen.insert(derive_run_seed(42, i));
        }
        CHECK(seen.size() == 10000);
        CHECK(derive_run_seed(42, 7) == derive_run_seed(42, 7));
        CHECK(derive_run_seed(42, 7) != derive_run_seed(43, 7));
    }

    TEST_CASE("uniforms lie in (0, 1]")
    {
        CounterStream s(1, StreamTag::test);
        double lo = 1.0, sum = 0.0;
        int const n = 100000;
        for (int i = 0; i < n; ++i)
        {
            double const u = s.uniform();
            REQUIRE(u > 0.0);
            REQUIRE(u <= 1.0);
            lo = std::min(lo, u);
            sum += u;
        }
        CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
        CHECK(s.blocks_used() == n / 2);
    }

    TEST_CASE("gaussian moments")
    {
        CounterStream s(2, StreamTag::test);
        int const n = 200000;
        double m1 = 0, m2 = 0, m4 = 0;
        for (int i = 0; i < n; ++i)
        {
            double const z = s.gaussian();
            m1 += z;
            m2 += z * z;
            m4 += z * z * z * z;
        }
        m1 /= n;
        m2 /= n;
        m4 /= n;
        CHECK(std::abs(m1) < 4.0 / std::sqrt(n));
        CHECK(m2 == doctest::Approx(1.0).epsilon(0.015));
        CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
    }

    TEST_CASE("substreams are addressable and disjoint")
    {
        std::vector<double> a(7), b(7);
        CounterStream(9, StreamTag::sampler, 3).fill_gaussian(a);
        CounterStream s(9, StreamTag::sampler, 3);
        for (double& z : b)
        {
            z = s.gaussian();
        }
        CHECK(a == b);

        std::vector<double> other(7);
        CounterStream(9, StreamTag::sampler, 4).fill_gaussian(other);
        CHECK(other != a);
        CounterStream(9, StreamTag::oracle, 3).fill_gaussian(other);
        CHECK(other != a);
        CounterStream(10, StreamTag::sampler, 3).fill_gaussian(other);
        CHECK(other != a);
    }
}
