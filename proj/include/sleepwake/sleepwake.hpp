#pragma once

#include "sleepwake/analytic.hpp"
#include "sleepwake/config_io.hpp"
#include "sleepwake/distribution.hpp"
#include "sleepwake/error.hpp"
#include "sleepwake/experiments.hpp"
#include "sleepwake/game.hpp"
#include "sleepwake/model.hpp"
#include "sleepwake/optimizer.hpp"
#include "sleepwake/simulator.hpp"
