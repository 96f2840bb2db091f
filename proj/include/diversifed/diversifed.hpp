#pragma once

#include "diversifed/client_trainer.hpp"
#include "diversifed/config.hpp"
#include "diversifed/datasets.hpp"
#include "diversifed/distance_core.hpp"
#include "diversifed/metrics.hpp"
#include "diversifed/neural.hpp"
#include "diversifed/orchestrator.hpp"
#include "diversifed/param_space.hpp"
#include "diversifed/rng.hpp"
#include "diversifed/verify.hpp"
