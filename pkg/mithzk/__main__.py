#!python


if __name__ == "__main__":
    import mithzk.cli
    mithzk.cli.run()
