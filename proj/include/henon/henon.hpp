#pragma once

#include "henon/error.hpp"
#include "henon/exponents.hpp"
#include "henon/dynsys.hpp"
#include "henon/local_analysis.hpp"
#include "henon/integrator.hpp"
#include "henon/parallel.hpp"
#include "henon/shooting.hpp"
#include "henon/profiles.hpp"
#include "henon/portrait.hpp"
#include "henon/io.hpp"
