#pragma once

#include "kerrsim/analysis.hpp"
#include "kerrsim/errors.hpp"
#include "kerrsim/experiments.hpp"
#include "kerrsim/fock_oracle.hpp"
#include "kerrsim/gates.hpp"
#include "kerrsim/homodyne.hpp"
#include "kerrsim/hybrid_state.hpp"
#include "kerrsim/kerrsim_version.hpp"
#include "kerrsim/rng.hpp"
