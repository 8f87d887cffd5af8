#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "vapormem/engine.hpp"
#include "vapormem/harness.hpp"

using namespace vapormem;

namespace {

Memory table1_memory(PhysicsParams p = default_params()) { return Memory(p, table1_calibration()); }

}  // namespace

TEST(NewMemory, Construction) {
  const auto mem = new_memory(default_params(), table1_calibration());
  EXPECT_EQ(mem.rails().size(), 4u);
  EXPECT_TRUE(mem.components().empty());
  EXPECT_EQ(mem.t_now(), 0.0);
  EXPECT_FALSE(mem.last_op_t().has_value());
}

TEST(NewMemory, Errors) {
  const auto p = default_params();
  EXPECT_THROW(new_memory(p, {make_rail(170, 4.3, 0.5, 0.32), make_rail(170, 4.3, 0.5, 0.32)}),
               DuplicateRailError);
  EXPECT_THROW(new_memory(p, {make_rail(260, 4.3, 0.5, 0.32)}), OutOfBandError);
  EXPECT_THROW(new_memory(p, {}), PreconditionError);
}

TEST(Pump, EmptiesCoaxialComponent) {
  auto mem = table1_memory();
  mem.write(190, 0, 1.0);
  mem.pump(190, 400);
  EXPECT_EQ(mem.stored_on(190), 0.0);
  EXPECT_TRUE(mem.components().empty());
}

TEST(Pump, EmptyMemoryIsNoOp) {
  auto mem = table1_memory();
  mem.pump(210, 100);
  EXPECT_TRUE(mem.components().empty());
  EXPECT_EQ(mem.t_now(), 100.0);
}

TEST(Pump, FarRailUntouched) {
  auto mem = table1_memory();
  mem.write(230, 0, 1.0);
  const double before = mem.stored_on(230);
  mem.pump(190, 400);
  EXPECT_LE(std::abs(mem.stored_on(230) - before), 1e-6 * before);
}

TEST(Pump, PartialFidelity) {
  auto p = default_params();
  p.pump_fidelity = 0.9;
  auto mem = table1_memory(p);
  mem.write(190, 0, 1.0);
  mem.pump(190, 400);
  EXPECT_NEAR(mem.stored_on(190), 0.1 * std::sqrt(0.35), 1e-15);
}

TEST(Write, LeakageAndStorage) {
  auto mem = table1_memory();
  const double leak = mem.write(230, 0, 1.0);
  EXPECT_NEAR(mem.stored_on(230), 0.6, 1e-15);
  EXPECT_NEAR(leak, 0.4, 1e-15);
  const auto& c = mem.components().front();
  EXPECT_EQ(c.x_center, physics::rail_position(230, default_params()));
  EXPECT_EQ(c.s2, 135.0 * 135.0);
  EXPECT_EQ(c.t_birth, 0.0);
  EXPECT_EQ(c.tau, 2.6);
}

TEST(Write, EnergyAccountingOnEmptyRegion) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> e(0.01, 10.0);
  const double rails[] = {170, 190, 210, 230};
  for (int i = 0; i < 200; ++i) {
    auto mem = table1_memory();
    const double f = rails[i % 4];
    const double in = e(rng);
    const double leak = mem.write(f, 0, in);
    EXPECT_NEAR(leak + mem.stored_on(f), in, 1e-14 * in);
  }
}

TEST(Write, Errors) {
  auto mem = table1_memory();
  EXPECT_THROW(mem.write(190, 0, 0.0), PreconditionError);
  EXPECT_THROW(mem.write(200, 0, 1.0), UnknownRailError);
  mem.write(190, 400, 1.0);
  EXPECT_THROW(mem.write(190, 300, 1.0), TimeOrderError);
  EXPECT_THROW(mem.read(190, 399), TimeOrderError);
}

TEST(Write, SecondWriteDepletesFirst) {
  auto mem = table1_memory();
  mem.write(190, 0, 1.0);
  mem.write(190, 400, 1.0);
  // only the fresh component remains
  ASSERT_EQ(mem.components().size(), 1u);
  EXPECT_EQ(mem.components().front().t_birth, 400.0);
}

TEST(Read, RetrievalAfterWrite) {
  auto mem = table1_memory();
  mem.write(190, 0, 1.0);
  const double got = mem.read(190, 400);
  EXPECT_NEAR(got, 0.35 * std::exp(-0.4 / 5.4), 1e-12);
  EXPECT_NEAR(got, 0.325, 1e-3);
  const double again = mem.read(190, 800);
  EXPECT_LE(again, 1e-2 * got);
}

TEST(Read, NeverWrittenRailIsDark) {
  auto mem = table1_memory();
  EXPECT_LE(mem.read(170, 0), 1e-6);
  mem.write(230, 400, 1.0);
  EXPECT_LE(mem.read(170, 800), 1e-6);
}

TEST(Read, HandFormulaForNeighbor) {
  // read at 20 MHz from a fresh component: eta_w(190) eta_r(210) e^{-t/tau} chi(675, s2(t))
  auto mem = table1_memory();
  mem.write(190, 0, 1.0);
  const double got = mem.read(210, 400);
  const double D = 0.24 * (760.0 / 5.0) * std::pow(333.15 / 273.15, 1.5);
  const double s2 = 135.0 * 135.0 + 2.0 * D * 100.0 * 0.4;
  const double v = 350.0 * 350.0 / 4.0;
  const double expected = std::sqrt(0.35) * std::sqrt(0.39) * std::exp(-0.4 / 5.4) *
                          std::exp(-675.0 * 675.0 / (2.0 * (s2 + v)));
  EXPECT_NEAR(got, expected, 1e-12);
}

TEST(Read, NeighborAtTwentyMHzBarelyDisturbs) {
  auto undisturbed = table1_memory();
  undisturbed.write(190, 0, 1.0);
  const double ref = undisturbed.read(190, 800);

  auto disturbed = table1_memory();
  disturbed.write(190, 0, 1.0);
  disturbed.read(210, 400);
  const double got = disturbed.read(190, 800);
  EXPECT_LE(std::abs(got - ref) / ref, 0.01);
}

TEST(Read, NoOperationIncreasesAmplitude) {
  std::mt19937_64 rng(17);
  std::uniform_int_distribution<int> rail(0, 3), kind(0, 2);
  const double rails[] = {170, 190, 210, 230};
  for (int trial = 0; trial < 50; ++trial) {
    auto mem = table1_memory();
    double t = 0.0;
    for (int k = 0; k < 20; ++k) {
      t += 100.0;
      const auto before = mem.components();
      const double f = rails[rail(rng)];
      switch (kind(rng)) {
        case 0: mem.write(f, t, 1.0); break;
        case 1: mem.read(f, t); break;
        default: mem.pump(f, t); break;
      }
      // every surviving pre-existing component is not larger than before
      for (const auto& c : mem.components())
        for (const auto& b : before)
          if (c.t_birth == b.t_birth && c.x_center == b.x_center) {
            EXPECT_LE(c.amplitude, b.amplitude);
          }
      for (const auto& c : mem.components()) {
        EXPECT_GE(c.amplitude, 0.0);
        EXPECT_GE(c.s2, 135.0 * 135.0);
      }
    }
  }
}

TEST(Read, ComposableWithIdleAdvance) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> frac(0.01, 0.99);
  for (double f_read : {190.0, 210.0, 230.0}) {
    for (int i = 0; i < 20; ++i) {
      auto a = table1_memory();
      auto b = table1_memory();
      a.write(190, 100, 1.0);
      b.write(190, 100, 1.0);
      const double t2 = 5000.0;
      b.advance_to(100 + frac(rng) * (t2 - 100));
      const double ra = a.read(f_read, t2);
      const double rb = b.read(f_read, t2);
      EXPECT_LE(std::abs(ra - rb), 1e-12 * ra);
    }
  }
}

TEST(Read, DiffusiveModeUsesVarianceRatio) {
  auto p = default_params();
  p.decay_mode = DecayMode::Diffusive;
  auto mem = table1_memory(p);
  mem.write(190, 0, 1.0);
  const double got = mem.read(190, 2000);
  const double D = physics::diffusion_coefficient(p);
  const double v = 350.0 * 350.0 / 4.0;
  const double s2 = 135.0 * 135.0 + 2.0 * D * 100.0 * 2.0;
  EXPECT_NEAR(got, 0.35 * (135.0 * 135.0 + v) / (s2 + v), 1e-12);
}

TEST(RunSequence, CanonicalProducesTwelveEvents) {
  auto mem = table1_memory();
  const auto seq = harness::canonical_random_access_sequence();
  const auto trace = run_sequence(mem, seq);
  ASSERT_EQ(trace.size(), 12u);
  EXPECT_EQ(trace.back().t - trace.front().t, 4400.0);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    EXPECT_EQ(trace[i].t, seq.ops()[i].t);
    EXPECT_EQ(trace[i].kind, seq.ops()[i].kind);
    EXPECT_GE(trace[i].out_energy, 0.0);
    EXPECT_GE(trace[i].stored_after, 0.0);
  }
}

TEST(RunSequence, EmptySequence) {
  auto mem = table1_memory();
  EXPECT_TRUE(run_sequence(mem, Sequence("empty", {190}, {})).empty());
}

TEST(RunSequence, RejectsSpacingBelowSwitchTime) {
  auto mem = table1_memory();
  Sequence seq("fast", {190, 230}, {{0, OpKind::Write, 190, 1.0}, {47, OpKind::Write, 230, 1.0}});
  try {
    run_sequence(mem, seq);
    FAIL() << "expected ValidationError";
  } catch (const seqlang::ValidationError& e) {
    ASSERT_EQ(e.diagnostics().size(), 1u);
    EXPECT_EQ(e.diagnostics()[0].code, "E001");
  }
  EXPECT_TRUE(mem.components().empty());
}

TEST(RunSequence, Deterministic) {
  const auto seq = harness::canonical_random_access_sequence();
  auto a = table1_memory();
  auto b = table1_memory();
  const auto ta = run_sequence(a, seq);
  const auto tb = run_sequence(b, seq);
  EXPECT_EQ(ta, tb);
}

TEST(Waveform, AreaEqualsEnergy) {
  OpticalConfig cfg;
  Trace tr{{1000.0, OpKind::Read, 190, 0.325, 0.0}};
  const auto wf = render_waveform(tr, cfg, 1.0, 0.0, TimeWindow{0.0, 2000.0});
  std::vector<double> y;
  for (const auto& s : wf) y.push_back(s.intensity);
  EXPECT_NEAR(oracle::trapezoid(y, 1.0), 0.325, 0.325 * 1e-3);
}

TEST(Waveform, EmptyTraceIsZero) {
  const auto wf = render_waveform({}, OpticalConfig{}, 1.0, 0.0);
  ASSERT_FALSE(wf.empty());
  for (const auto& s : wf) EXPECT_EQ(s.intensity, 0.0);
}

TEST(Waveform, NoiseFloorAdded) {
  const auto wf = render_waveform({}, OpticalConfig{}, 2.0, 0.01);
  for (const auto& s : wf) EXPECT_EQ(s.intensity, 0.01);
}

TEST(Waveform, PulsesResolved) {
  Trace tr{{1000.0, OpKind::Read, 190, 1.0, 0.0}, {1400.0, OpKind::Read, 190, 1.0, 0.0}};
  const auto wf = render_waveform(tr, OpticalConfig{}, 1.0, 0.0, TimeWindow{0.0, 3000.0});
  const double peak = wf[1000].intensity;
  const double valley = wf[1200].intensity;
  EXPECT_GT(peak, 0.0);
  EXPECT_LT(valley, 1e-6 * peak);
}

TEST(Waveform, CanonicalDefaultWindowIsFiveMicroseconds) {
  auto mem = table1_memory();
  const auto trace = run_sequence(mem, harness::canonical_random_access_sequence());
  EXPECT_EQ(render_waveform(trace, OpticalConfig{}, 1.0, 0.0).size(), 5000u);
  EXPECT_THROW(render_waveform(trace, OpticalConfig{}, 0.0, 0.0), DomainError);
}
