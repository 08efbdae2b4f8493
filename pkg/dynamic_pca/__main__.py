from dynamic_pca.commands import main

if __name__ == '__main__':
    main()
