from lfagcl.main import app

app(prog_name="lfagcl")
