// Umbrella header.
#pragma once

#include "checks.hpp"
#include "corpus.hpp"
#include "gibbs.hpp"
#include "models.hpp"
#include "parser.hpp"
#include "potential.hpp"
#include "run_config.hpp"
#include "runner.hpp"
