#pragma once

// Convenience header pulling in the whole library.

#include "l1heat/csv.hpp"
#include "l1heat/diagnostics.hpp"
#include "l1heat/errors.hpp"
#include "l1heat/fespace.hpp"
#include "l1heat/geometry.hpp"
#include "l1heat/levelset.hpp"
#include "l1heat/linalg.hpp"
#include "l1heat/mesh.hpp"
#include "l1heat/quadrature.hpp"
#include "l1heat/registry.hpp"
#include "l1heat/scheme.hpp"
#include "l1heat/truncation.hpp"
