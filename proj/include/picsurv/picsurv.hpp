#pragma once

#include "picsurv/error.hpp"
#include "picsurv/numeric.hpp"
#include "picsurv/rng.hpp"
#include "picsurv/parallel.hpp"
#include "picsurv/model.hpp"
#include "picsurv/likelihood.hpp"
#include "picsurv/priors.hpp"
#include "picsurv/diagnostics.hpp"
#include "picsurv/mcmc.hpp"
#include "picsurv/simulate.hpp"
#include "picsurv/pi_mle.hpp"
#include "picsurv/turnbull.hpp"
#include "picsurv/study.hpp"
#include "picsurv/text.hpp"
#include "picsurv/io.hpp"
