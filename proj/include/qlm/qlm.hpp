#pragma once

// Everything except JSON I/O (qlm/io.hpp, which needs nlohmann_json).
#include "qlm/catalog.hpp"
#include "qlm/embedding.hpp"
#include "qlm/errors.hpp"
#include "qlm/fields.hpp"
#include "qlm/functionals.hpp"
#include "qlm/harmonics.hpp"
#include "qlm/jang_shitam.hpp"
#include "qlm/optimal.hpp"
#include "qlm/sphere_calculus.hpp"
#include "qlm/sphere_grid.hpp"
