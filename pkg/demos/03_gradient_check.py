"""Verify every analytic gradient against central finite differences.

The battery checks each layer in isolation (driving backward with a
random projection of the output) and the four composed classifiers under
their real softmax cross entropy loss, sampling coordinates of every
parameter tensor.  It also re-runs with one backward pass deliberately
corrupted to prove the comparison can fail.
"""

from sewnet.nn.gradcheck import standard_checks

print("full battery (float64, sampled coordinates):")
for result in standard_checks(samples=8):
    status = "ok  " if result.ok() else "FAIL"
    print(f"  {status} {result}")

print("\nnegative control (one backward pass scaled by 1.05):")
for result in standard_checks(samples=8, corrupt=True):
    if not result.ok():
        print(f"  FAIL {result}   <- corruption caught")
