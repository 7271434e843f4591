#pragma once

#include "bessel.hpp"
#include "compare.hpp"
#include "golden.hpp"
#include "hb_solver.hpp"
#include "io.hpp"
#include "limiter.hpp"
#include "linearization.hpp"
#include "modes.hpp"
#include "newton.hpp"
#include "params.hpp"
#include "spectrum.hpp"
#include "td_oracle.hpp"
#include "trig_expansion.hpp"
#include "unknowns.hpp"
#include "vsc_model.hpp"
