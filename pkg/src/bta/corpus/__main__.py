from . import build, path

print(build(path()))
