"""
Parsing and differentiating a residual
======================================

A formulator hands back a string. Here it becomes a tree, gets rendered back,
and is differentiated symbolically.
"""

# %%
from hybridsolve import expr as ex
from hybridsolve.autodiff import differentiate

text = "1/sqrt(x) + 2.0*log10((0.000045/0.15)/3.7 + 2.51/(100000*sqrt(x)))"
f = ex.parse(text)
print(ex.render(f))

# %%
# The rendering is fully parenthesised, so parsing it again gives the same tree.
assert ex.parse(ex.render(f)) == f

# %%
df = differentiate(f)
print(ex.render(df))

for x in (0.01, 0.02, 0.04):
    h = 1e-7
    fd = (ex.evaluate(f, x + h) - ex.evaluate(f, x - h)) / (2 * h)
    print(f"x={x:<5} f'={ex.evaluate(df, x): .6e}  central difference={fd: .6e}")

# %%
# Bad input is reported with a byte offset rather than a traceback from deep inside.
try:
    ex.parse("2x + sin(x")
except ex.ParseError as err:
    print(err)

# %%
# NumPy-style names are accepted since that is what formulators tend to write.
print(ex.render(ex.parse("np.exp(x/0.026) - math.pi")))
