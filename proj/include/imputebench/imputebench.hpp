#pragma once

#include "imputebench/amputation.hpp"
#include "imputebench/config.hpp"
#include "imputebench/csv.hpp"
#include "imputebench/dataset.hpp"
#include "imputebench/error.hpp"
#include "imputebench/evaluation.hpp"
#include "imputebench/experiment.hpp"
#include "imputebench/forest.hpp"
#include "imputebench/imputers.hpp"
#include "imputebench/linear.hpp"
#include "imputebench/mvn.hpp"
#include "imputebench/parallel.hpp"
#include "imputebench/pmm.hpp"
#include "imputebench/random.hpp"
#include "imputebench/stats.hpp"
#include "imputebench/synthetic.hpp"
