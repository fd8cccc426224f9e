#pragma once

#include "autopl/dsr/trainer.hpp"
#include "autopl/kan/network.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace autopl::presets
{

inline const std::vector<std::string>& names()
{
  static const std::vector<std::string> n{"abg", "ci", "indoor", "outdoor"};
  return n;
}

// Tuned KAN settings per dataset.
inline kan::KanTrainConfig kan(const std::string& name)
{
  kan::KanTrainConfig c;
  c.order = 3;
  if (name == "abg") {
    c.shape = {6, 6, 1};
    c.grid = 10;
    c.steps = 100;
    c.lambda = 0.002;
  } else if (name == "ci") {
    c.shape = {4, 4, 1};
    c.grid = 8;
    c.steps = 300;
    c.lambda = 0.002;
  } else if (name == "indoor") {
    c.shape = {4, 1};
    c.grid = 5;
    c.steps = 100;
    c.lambda = 0.0002;
  } else if (name == "outdoor") {
    c.shape = {3, 1};
    c.grid = 50;
    c.steps = 100;
    c.lambda = 0.02;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected abg, ci, indoor or outdoor)");
  }
  return c;
}

// Tuned DSR settings per dataset and policy. Only the sample budget, batch
// size, learning rate and entropy weight differ; the rest stay at defaults.
inline dsr::TrainerConfig dsr(const std::string& name, dsr::PolicyKind kind)
{
  struct Row
  {
    std::size_t budget, batch;
    double lr, entropy;
  };
  // rspg, pqt, vpg
  Row rows[3];
  if (name == "abg") {
    rows[0] = {50000, 200, 0.002, 0.008};
    rows[1] = {20000, 200, 0.002, 0.005};
    rows[2] = {30000, 200, 0.0001, 0.005};
  } else if (name == "ci") {
    rows[0] = {2000, 200, 0.001, 0.008};
    rows[1] = {3000, 200, 0.002, 0.005};
    rows[2] = {1000, 200, 0.0005, 0.008};
  } else if (name == "indoor") {
    rows[0] = {50000, 300, 0.0005, 0.03};
    rows[1] = {50000, 200, 0.001, 0.01};
    rows[2] = {50000, 200, 0.001, 0.02};
  } else if (name == "outdoor") {
    rows[0] = {50000, 200, 0.0005, 0.01};
    rows[1] = {50000, 200, 0.0005, 0.01};
    rows[2] = {50000, 200, 0.0001, 0.01};
  } else {
    throw std::invalid_argument("unknown preset '" + name + "' (expected abg, ci, indoor or outdoor)");
  }
  const Row& r = rows[kind == dsr::PolicyKind::Rspg ? 0 : kind == dsr::PolicyKind::Pqt ? 1 : 2];
  dsr::TrainerConfig c;
  c.policy_kind = kind;
  c.sample_budget = r.budget;
  c.batch_size = r.batch;
  c.learning_rate = r.lr;
  c.entropy_weight = r.entropy;
  return c;
}

} // namespace autopl::presets
