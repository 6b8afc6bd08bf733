#pragma once

// Differentially private Bayesian linear regression: perturbed sufficient
// statistics released once, then noise-aware posterior sampling.

#include "dpreg/baselines.hpp"
#include "dpreg/distributions.hpp"
#include "dpreg/eval.hpp"
#include "dpreg/gibbs.hpp"
#include "dpreg/io.hpp"
#include "dpreg/linalg.hpp"
#include "dpreg/model.hpp"
#include "dpreg/moments.hpp"
#include "dpreg/privacy.hpp"
#include "dpreg/random.hpp"
#include "dpreg/samples.hpp"
