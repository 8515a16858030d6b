#pragma once

#include "codegen.hpp"
#include "components.hpp"
#include "error.hpp"
#include "kernel.hpp"
#include "memory.hpp"
#include "model.hpp"
#include "payload.hpp"
#include "ratio.hpp"
#include "render.hpp"
#include "sim_time.hpp"
#include "sysdesc.hpp"
#include "trace.hpp"
#include "transport.hpp"
