#pragma once

#include "ssburgers/artifacts.hpp"
#include "ssburgers/basis.hpp"
#include "ssburgers/commands.hpp"
#include "ssburgers/config.hpp"
#include "ssburgers/dynamics.hpp"
#include "ssburgers/noise.hpp"
#include "ssburgers/rng.hpp"
#include "ssburgers/selfsim.hpp"
#include "ssburgers/stats.hpp"
