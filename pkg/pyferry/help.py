import sys

import numpy
import prompt_toolkit
import scipy
from prompt_toolkit.formatted_text import HTML

import pyferry

python_version = sys.version_info
ptk_version = prompt_toolkit.__version__
pyferry_version = pyferry.__version__


HELP = HTML(
    """
            <title>SUMMARY OF COMMANDS</title>

 <keys>run CONFIG             </keys> Simulate the configured network once.
 <keys>sweep CONFIG           </keys> Simulate every point of the configured sweep.
 <keys>boundary CONFIG        </keys> Bisect the arrival-rate scale for the stability limit.
 <keys>delay-table            </keys> Closed-form vs. simulated delay of one flow, two robots.
 <keys>capacity check         </keys> Test arrival rates against the capacity region.
 <keys>capacity program       </keys> Write a static schedule program achieving given rates.
 <keys>config CONFIG          </keys> Print the configuration with every default filled in.

 <line>------------------------------------------------------</line>

  <subtitle> Common options </subtitle>

 <keys>-o  --output PATH      </keys> Where to write the CSV or program file.
 <keys>    --horizon EPOCHS   </keys> Override the simulation horizon.
 <keys>    --seed SEED        </keys> Seed for random robot placement.
 <keys>    --workers N        </keys> Run sweep points in N processes.
 <keys>-v  -vv                </keys> Log progress (INFO) or every epoch (DEBUG).

  <subtitle> Schedulers </subtitle>

  <keys>cbmf</keys>          Max-weight matching of robots to sources and sinks, every epoch.
  <keys>static</keys>        Replay a schedule program read from a JSON file.
  <keys>oracle</keys>        Static program synthesized from the arrival rates.
  <keys>brute_force</keys>   Exhaustive search over every slot vector (small networks).

  <subtitle> About pyferry </subtitle>

  - pyferry version:        <version>%s</version>
  - Python version:         <version>%s.%s.%s</version>
  - prompt_toolkit version: <version>%s</version>
  - numpy version:          <version>%s</version>
  - scipy version:          <version>%s</version>

"""
) % (
    pyferry_version,
    python_version[0],
    python_version[1],
    python_version[2],
    ptk_version,
    numpy.__version__,
    scipy.__version__,
)
