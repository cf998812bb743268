#pragma once

#include "cpwlnet/error.hpp"
#include "cpwlnet/numeric.hpp"
#include "cpwlnet/data_model.hpp"
#include "cpwlnet/partition.hpp"
#include "cpwlnet/fitting.hpp"
#include "cpwlnet/cpwl.hpp"
#include "cpwlnet/network.hpp"
#include "cpwlnet/runtime.hpp"
#include "cpwlnet/netbuild.hpp"
#include "cpwlnet/pipeline.hpp"
#include "cpwlnet/verify.hpp"
#include "cpwlnet/svg.hpp"
