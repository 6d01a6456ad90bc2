#pragma once

#include "retrovec/config.hpp"
#include "retrovec/error.hpp"
#include "retrovec/evalsuite.hpp"
#include "retrovec/interpolate.hpp"
#include "retrovec/kgraph.hpp"
#include "retrovec/labeled_matrix.hpp"
#include "retrovec/labelspace.hpp"
#include "retrovec/matrixio.hpp"
#include "retrovec/pipeline.hpp"
#include "retrovec/retrofit.hpp"
#include "retrovec/rowmerge.hpp"
