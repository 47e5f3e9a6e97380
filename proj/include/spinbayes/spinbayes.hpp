#pragma once

#include "spinbayes/arith.hpp"
#include "spinbayes/bayes.hpp"
#include "spinbayes/constants.hpp"
#include "spinbayes/device.hpp"
#include "spinbayes/errors.hpp"
#include "spinbayes/io.hpp"
#include "spinbayes/llg.hpp"
#include "spinbayes/pulse.hpp"
#include "spinbayes/rng.hpp"
#include "spinbayes/vec3.hpp"
