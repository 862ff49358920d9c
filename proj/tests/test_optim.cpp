#include <doctest.h>

#include <cmath>
#include <limits>

#include "longconv/optim.hpp"
#include "longconv/tensor.hpp"

using namespace longconv;

namespace {

Tensor<double> param_with_grad(double value, double grad) {
  auto p = Tensor<double>::from({1}, {value}, true);
  p.grad()[0] = grad;
  return p;
}

}  // namespace

TEST_CASE("sgd pinned examples") {
  // lr=0 leaves params unchanged.
  {
    std::vector<Tensor<double>> params{param_with_grad(1.0, 2.0)};
    Sgd<double> opt(0.0, 0.0);
    opt.step(params, 0.0);
    CHECK(params[0].data()[0] == 1.0);
  }
  // mu=0, wd=0, p=1, g=2, lr=0.1 -> 0.8
  {
    std::vector<Tensor<double>> params{param_with_grad(1.0, 2.0)};
    Sgd<double> opt(0.0, 0.0);
    opt.step(params, 0.1);
    CHECK(params[0].data()[0] == doctest::Approx(0.8).epsilon(1e-15));
  }
  // momentum recurrence: mu=0.9, g=1, lr=1, p0=0 -> -1 then -2.9
  {
    std::vector<Tensor<double>> params{param_with_grad(0.0, 1.0)};
    Sgd<double> opt(0.9, 0.0);
    opt.step(params, 1.0);
    CHECK(params[0].data()[0] == doctest::Approx(-1.0).epsilon(1e-15));
    params[0].grad()[0] = 1.0;
    opt.step(params, 1.0);
    CHECK(params[0].data()[0] == doctest::Approx(-2.9).epsilon(1e-15));
  }
}

TEST_CASE("sgd converges monotonically on f(p)=p^2/2 for lr<2") {
  for (double lr : {0.1, 0.7, 1.5, 1.9}) {
    auto p = Tensor<double>::from({1}, {3.0}, true);
    std::vector<Tensor<double>> params{p};
    Sgd<double> opt(0.0, 0.0);
    double prev = std::abs(p.data()[0]);
    for (int i = 0; i < 60; ++i) {
      p.zero_grad();
      p.grad()[0] = p.data()[0];  // grad of p^2/2
      opt.step(params, lr);
      const double cur = std::abs(p.data()[0]);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
    CHECK(prev < 1.0);
  }
}

TEST_CASE("adam pinned behaviors") {
  // First step: update magnitude ~ lr regardless of |g|.
  for (double g : {0.01, 1.0, 250.0}) {
    std::vector<Tensor<double>> params{param_with_grad(5.0, g)};
    Adam<double> opt(0.9, 0.999, 1e-8, 0.0);
    opt.step(params, 0.001);
    CHECK(std::abs(5.0 - params[0].data()[0]) == doctest::Approx(0.001).epsilon(1e-4));
  }
  // lr=0: params unchanged, moments still advance.
  {
    std::vector<Tensor<double>> params{param_with_grad(5.0, 1.0)};
    Adam<double> opt(0.9, 0.999, 1e-8, 0.0);
    opt.step(params, 0.0);
    CHECK(params[0].data()[0] == 5.0);
    CHECK(opt.steps_taken() == 1);
  }
  // wd=0 and g=0 forever: params fixed.
  {
    std::vector<Tensor<double>> params{param_with_grad(5.0, 0.0)};
    Adam<double> opt(0.9, 0.999, 1e-8, 0.0);
    for (int i = 0; i < 5; ++i) {
      params[0].zero_grad();
      opt.step(params, 0.01);
    }
    CHECK(params[0].data()[0] == 5.0);
  }
}

TEST_CASE("non-finite gradients reject the step and leave all state untouched") {
  auto run_two_finite_steps = [](Sgd<double>& opt, std::vector<Tensor<double>>& params) {
    params[0].zero_grad();
    params[0].grad()[0] = 1.0;
    opt.step(params, 0.1);
  };
  std::vector<Tensor<double>> clean{param_with_grad(1.0, 1.0)};
  Sgd<double> clean_opt(0.9, 0.0);
  clean_opt.step(clean, 0.1);
  run_two_finite_steps(clean_opt, clean);

  std::vector<Tensor<double>> poisoned{param_with_grad(1.0, 1.0)};
  Sgd<double> poisoned_opt(0.9, 0.0);
  poisoned_opt.step(poisoned, 0.1);
  poisoned[0].zero_grad();
  poisoned[0].grad()[0] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(poisoned_opt.step(poisoned, 0.1), OptimError);
  // Rejected step left params and velocity as they were.
  run_two_finite_steps(poisoned_opt, poisoned);
  CHECK(poisoned[0].data()[0] == clean[0].data()[0]);

  std::vector<Tensor<double>> adam_params{param_with_grad(1.0,
                                                          std::numeric_limits<double>::infinity())};
  Adam<double> adam;
  CHECK_THROWS_AS(adam.step(adam_params, 0.1), OptimError);
  CHECK(adam_params[0].data()[0] == 1.0);
  CHECK(adam.steps_taken() == 0);
}

TEST_CASE("one_cycle_lr pinned values") {
  ScheduleConfig cfg;
  cfg.total_steps = 1000;
  cfg.kind = ScheduleKind::one_cycle;
  cfg.max_lr = 0.01;
  CHECK(one_cycle_lr(300, cfg) == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(one_cycle_lr(0, cfg) == doctest::Approx(4e-4).epsilon(1e-15));
  CHECK(one_cycle_lr(1000, cfg) == doctest::Approx(1e-6).epsilon(1e-15));
  CHECK_THROWS_AS(one_cycle_lr(1001, cfg), OptimError);
  CHECK_THROWS_AS(one_cycle_lr(-1, cfg), OptimError);
}

TEST_CASE("warmup_linear_lr pinned values") {
  ScheduleConfig cfg;
  cfg.total_steps = 1000;
  cfg.kind = ScheduleKind::warmup_linear;
  cfg.max_lr = 1e-4;
  CHECK(warmup_linear_lr(150, cfg) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(warmup_linear_lr(300, cfg) == doctest::Approx(1e-4).epsilon(1e-15));
  CHECK(warmup_linear_lr(650, cfg) == doctest::Approx(5e-5).epsilon(1e-15));
  CHECK(warmup_linear_lr(0, cfg) == 0.0);
  CHECK(warmup_linear_lr(1000, cfg) == doctest::Approx(0.0));
}

TEST_CASE("schedules are continuous, peak exactly at max_lr, deterministic") {
  for (auto kind : {ScheduleKind::one_cycle, ScheduleKind::warmup_linear}) {
    ScheduleConfig cfg;
    cfg.total_steps = 500;
    cfg.kind = kind;
    cfg.max_lr = 0.02;
    double peak = 0.0;
    double prev = schedule_lr(0, cfg);
    for (std::int64_t s = 1; s <= 500; ++s) {
      const double lr = schedule_lr(s, cfg);
      CHECK(std::abs(lr - prev) < 0.02 * 0.02);  // no jumps
      peak = std::max(peak, lr);
      prev = lr;
      CHECK(schedule_lr(s, cfg) == lr);  // pure function of (step, cfg)
    }
    CHECK(peak == doctest::Approx(0.02).epsilon(1e-15));
    CHECK(schedule_lr(150, cfg) == doctest::Approx(0.02).epsilon(1e-15));  // 0.3 * 500
  }
}

TEST_CASE("schedule config validation") {
  ScheduleConfig cfg;
  cfg.total_steps = 0;
  CHECK_THROWS_AS(cfg.validate(), OptimError);
  cfg.total_steps = 10;
  cfg.max_lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), OptimError);
  cfg.max_lr = 0.1;
  cfg.warmup_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), OptimError);
}
