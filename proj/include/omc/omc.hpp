// Convenience header pulling in the whole toolkit.
#pragma once

#include "cavity.hpp"
#include "config.hpp"
#include "core.hpp"
#include "dynamics.hpp"
#include "fit.hpp"
#include "fock.hpp"
#include "io.hpp"
#include "optomech.hpp"
#include "sim.hpp"
#include "stats.hpp"
#include "transducer.hpp"
