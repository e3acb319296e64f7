#include <doctest.h>

#include <cmath>

#include "alvc/motion.hpp"
#include "alvc/nn/rng.hpp"

using namespace alvc;
using namespace alvc::motion;

namespace {

FlowField uniform_flow(int h, int w, float fx, float fy) {
  FlowField f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      f.vec.at(0, 0, y, x) = fx;
      f.vec.at(0, 1, y, x) = fy;
    }
  return f;
}

// displacement(dt) = a*dt^2/2 + v*dt, the generator used as the oracle
float quad_disp(float a, float v, int dt) { return 0.5f * a * dt * dt + v * dt; }

}  // namespace

TEST_CASE("delta-t bookkeeping") {
  DeltaT d1 = DeltaT::for_step(1, 2);
  CHECK(d1.bc == 3);
  CHECK(d1.ct == -2);
  CHECK(d1.cb == -3);
  CHECK(d1.valid());
  DeltaT d2 = DeltaT::for_step(2, 2);
  CHECK(d2.bc == 2);
  CHECK(d2.ct == -1);
  CHECK(d2.cb == -2);
  DeltaT d3 = DeltaT::for_step(3, 3);
  CHECK(d3.bc == 2);
  CHECK(d3.ct == -1);
  CHECK(d3.cb == -2);
}

TEST_CASE("fit from B") {
  SUBCASE("constant velocity gives zero acceleration") {
    auto m = fit_from_b(uniform_flow(4, 4, -1, -1), uniform_flow(4, 4, 2, 2), 2);
    for (size_t i = 0; i < m.accel.size(); ++i) {
      CHECK(m.accel[i] == doctest::Approx(0.0f).epsilon(1e-6));
      CHECK(m.vel[i] == doctest::Approx(1.0f).epsilon(1e-6));
    }
  }
  SUBCASE("pure acceleration case") {
    // displacements through (-1,1) and (2,4)
    auto m = fit_from_b(uniform_flow(4, 4, 1, 1), uniform_flow(4, 4, 4, 4), 2);
    CHECK(m.accel[0] == doctest::Approx(2.0f).epsilon(1e-6));
    CHECK(m.vel[0] == doctest::Approx(0.0f).epsilon(1e-6));
    FlowField f_bt = predict_from_b(m);
    CHECK(f_bt.vec[0] == doctest::Approx(1.0f).epsilon(1e-6));
  }
  SUBCASE("zero flows") {
    auto m = fit_from_b(uniform_flow(4, 4, 0, 0), uniform_flow(4, 4, 0, 0), 3);
    CHECK(m.accel[0] == 0.0f);
    CHECK(m.vel[0] == 0.0f);
    CHECK(predict_from_b(m).vec[0] == 0.0f);
  }
  SUBCASE("degenerate spacing rejected") {
    CHECK_THROWS(fit_from_b(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), 0));
    CHECK_THROWS(fit_from_b(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), -1));
    CHECK_THROWS(fit_from_b(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), 1));
  }
}

TEST_CASE("predict from B closed forms") {
  MotionModel m;
  m.accel = uniform_flow(2, 2, -2, -2).vec;
  m.vel = uniform_flow(2, 2, 3, 3).vec;
  m.anchor = Anchor::B;
  CHECK(predict_from_b(m).vec[0] == doctest::Approx(2.0f));
  m.accel = uniform_flow(2, 2, 0, 0).vec;
  m.vel = uniform_flow(2, 2, 1, 1).vec;
  CHECK(predict_from_b(m).vec[0] == doctest::Approx(1.0f));
}

TEST_CASE("fit from C") {
  SUBCASE("constant velocity") {
    auto m = fit_from_c(uniform_flow(4, 4, -3, -3), uniform_flow(4, 4, 1, 1), -3);
    CHECK(m.accel[0] == doctest::Approx(0.0f).epsilon(1e-6));
    CHECK(m.vel[0] == doctest::Approx(1.0f).epsilon(1e-6));
  }
  SUBCASE("quadratic through (-2,-1) and (1,1.5)") {
    auto m = fit_from_c(uniform_flow(4, 4, -1, -1), uniform_flow(4, 4, 1.5f, 1.5f), -2);
    CHECK(m.accel[0] == doctest::Approx(2.0f / 3.0f).epsilon(1e-5));
    CHECK(m.vel[0] == doctest::Approx(7.0f / 6.0f).epsilon(1e-5));
    FlowField f_ct = predict_from_c(m, -1);
    CHECK(f_ct.vec[0] == doctest::Approx(1.0f / 3.0f - 7.0f / 6.0f).epsilon(1e-5));
  }
  SUBCASE("zero flows") {
    auto m = fit_from_c(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), -2);
    CHECK(m.accel[0] == 0.0f);
    CHECK(m.vel[0] == 0.0f);
  }
  SUBCASE("degenerate spacing rejected") {
    CHECK_THROWS(fit_from_c(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), 0));
    CHECK_THROWS(fit_from_c(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), 1));
    CHECK_THROWS(fit_from_c(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), -1));
  }
  SUBCASE("linear case dt constraints") {
    MotionModel m;
    m.accel = uniform_flow(2, 2, 0, 0).vec;
    m.vel = uniform_flow(2, 2, 1, 1).vec;
    m.anchor = Anchor::C;
    CHECK(predict_from_c(m, -2).vec[0] == doctest::Approx(-2.0f));
    CHECK_THROWS(predict_from_c(m, 0));
  }
}

TEST_CASE("linear prediction") {
  DeltaT dt = DeltaT::for_step(1, 2);  // bc=3, ct=-2, cb=-3
  SUBCASE("velocity scaling") {
    auto [bt, ct] = linear_predict(uniform_flow(4, 4, 2, 2), uniform_flow(4, 4, -3, -3),
                                   DeltaT::for_step(1, 1));  // bc=2, ct=-1, cb=-2
    CHECK(bt.vec[0] == doctest::Approx(1.0f));
    CHECK(ct.vec[0] == doctest::Approx(-1.5f));
  }
  SUBCASE("paper-matched spacings") {
    auto [bt, ct] = linear_predict(uniform_flow(4, 4, 2, 2), uniform_flow(4, 4, -3, -3), dt);
    CHECK(bt.vec[0] == doctest::Approx(2.0f / 3.0f));
    CHECK(ct.vec[0] == doctest::Approx(-2.0f));
  }
  SUBCASE("zero flows") {
    auto [bt, ct] = linear_predict(uniform_flow(2, 2, 0, 0), uniform_flow(2, 2, 0, 0), dt);
    CHECK(bt.vec[0] == 0.0f);
    CHECK(ct.vec[0] == 0.0f);
  }
}

TEST_CASE("quadratic fit recovers the generator") {
  nn::Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    int dt_bc = rng.uniform_int(2, 5);
    FlowField f_ba(6, 6), f_bc(6, 6), f_cb(6, 6), f_cd(6, 6);
    FlowField a(6, 6), v(6, 6);
    for (size_t i = 0; i < a.vec.size(); ++i) {
      a.vec[i] = rng.uniform(-2.0f, 2.0f);
      v.vec[i] = rng.uniform(-4.0f, 4.0f);
      f_ba.vec[i] = quad_disp(a.vec[i], v.vec[i], -1);
      f_bc.vec[i] = quad_disp(a.vec[i], v.vec[i], dt_bc);
      f_cd.vec[i] = quad_disp(a.vec[i], v.vec[i], 1);
      f_cb.vec[i] = quad_disp(a.vec[i], v.vec[i], -dt_bc);
    }
    auto mb = fit_from_b(f_ba, f_bc, dt_bc);
    auto mc = fit_from_c(f_cb, f_cd, -dt_bc);
    for (size_t i = 0; i < a.vec.size(); ++i) {
      CHECK(mb.accel[i] == doctest::Approx(a.vec[i]).epsilon(1e-5));
      CHECK(mb.vel[i] == doctest::Approx(v.vec[i]).epsilon(1e-5));
      CHECK(mc.accel[i] == doctest::Approx(a.vec[i]).epsilon(1e-5));
      CHECK(mc.vel[i] == doctest::Approx(v.vec[i]).epsilon(1e-5));
      // substituting the fit back reproduces the inputs
      CHECK(quad_disp(mb.accel[i], mb.vel[i], -1) == doctest::Approx(f_ba.vec[i]).epsilon(1e-5));
      CHECK(quad_disp(mb.accel[i], mb.vel[i], dt_bc) == doctest::Approx(f_bc.vec[i]).epsilon(1e-5));
    }
  }
}

TEST_CASE("zero acceleration degenerates to the linear model") {
  nn::Rng rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    int num_b = rng.uniform_int(1, 3);
    int step = rng.uniform_int(1, num_b);
    DeltaT dt = DeltaT::for_step(step, num_b);
    FlowField f_ba(4, 4), f_bc(4, 4), f_cb(4, 4);
    for (size_t i = 0; i < f_ba.vec.size(); ++i) {
      float vv = rng.uniform(-3.0f, 3.0f);
      f_ba.vec[i] = -vv;
      f_bc.vec[i] = vv * dt.bc;
      f_cb.vec[i] = vv * dt.cb;
    }
    auto quad = predict_from_b(fit_from_b(f_ba, f_bc, dt.bc));
    auto [lin_bt, lin_ct] = linear_predict(f_bc, f_cb, dt);
    for (size_t i = 0; i < quad.vec.size(); ++i)
      CHECK(quad.vec[i] == doctest::Approx(lin_bt.vec[i]).epsilon(1e-6));
  }
}

TEST_CASE("anchor symmetry on a time-flipped constant-velocity scene") {
  // forward scene: velocity +v; flipped scene: velocity -v
  float v = 1.75f;
  int span = 3;
  auto mb = fit_from_b(uniform_flow(4, 4, -v, -v), uniform_flow(4, 4, v * span, v * span), span);
  auto mc = fit_from_c(uniform_flow(4, 4, -v * span, -v * span), uniform_flow(4, 4, v, v), -span);
  CHECK(mb.vel[0] == doctest::Approx(v).epsilon(1e-6));
  CHECK(mc.vel[0] == doctest::Approx(v).epsilon(1e-6));
  // flip time: velocities negate
  auto mb_flip = fit_from_b(uniform_flow(4, 4, v, v), uniform_flow(4, 4, -v * span, -v * span), span);
  CHECK(mb_flip.vel[0] == doctest::Approx(-v).epsilon(1e-6));
  CHECK(std::fabs(mb_flip.vel[0]) == doctest::Approx(std::fabs(mb.vel[0])).epsilon(1e-6));
}

TEST_CASE("flow reversal") {
  SUBCASE("zero flow") {
    FlowField z(16, 16);
    FlowField r = reverse_flow(z);
    for (size_t i = 0; i < r.vec.size(); ++i) CHECK(r.vec[i] == 0.0f);
  }
  SUBCASE("uniform displacement") {
    FlowField f = uniform_flow(32, 32, 3, 0);
    FlowField r = reverse_flow(f);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        CHECK(r.vec.at(0, 0, y, x) == doctest::Approx(-3.0f).epsilon(1e-5));
        CHECK(r.vec.at(0, 1, y, x) == doctest::Approx(0.0f).epsilon(1e-5));
      }
  }
  SUBCASE("double reversal approximates identity on smooth flows") {
    nn::Rng rng(44);
    FlowField f(32, 32);
    float ax = rng.uniform(0.5f, 2.0f), ay = rng.uniform(0.5f, 2.0f);
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) {
        f.vec.at(0, 0, y, x) = ax * std::sin(2.0f * 3.14159265f * y / 32.0f);
        f.vec.at(0, 1, y, x) = ay * std::cos(2.0f * 3.14159265f * x / 32.0f);
      }
    FlowField rr = reverse_flow(reverse_flow(f));
    int interior = 0;
    for (int y = 4; y < 28; ++y)
      for (int x = 4; x < 28; ++x) {
        CHECK(std::fabs(rr.vec.at(0, 0, y, x) - f.vec.at(0, 0, y, x)) < 0.5f);
        CHECK(std::fabs(rr.vec.at(0, 1, y, x) - f.vec.at(0, 1, y, x)) < 0.5f);
        ++interior;
      }
    CHECK(interior > 0);
  }
}
